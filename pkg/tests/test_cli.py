import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from kreisslab.cli import EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from kreisslab.experiments import run_criterion


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def read_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return np.array([float(r["norm"]) for r in rows])


def test_gallery_list_and_show():
    code, text = run("gallery", "list")
    assert code == EXIT_OK and len(text.strip().splitlines()) == 7
    code, text = run("gallery", "show", "delta_shift")
    d = json.loads(text)
    assert d["weight"] == {"type": "poly", "delta": 0.8} and d["p"] == 2 and d["truncation"] == 512


def test_gallery_errors():
    assert run("gallery", "show", "bogus")[0] == EXIT_USAGE
    assert run("gallery", "show")[0] == EXIT_USAGE
    assert run()[0] == EXIT_USAGE


def test_norms_delta_shift(tmp_path):
    path = tmp_path / "n.csv"
    code, _ = run("norms", "--op", "delta_shift", "--n-max", "64", "--out", str(path))
    assert code == EXIT_OK
    np.testing.assert_allclose(read_csv(path.read_text()), np.arange(1, 66) ** 0.4, rtol=1e-14)


def test_norms_identity_inline_json():
    spec = json.dumps({"kind": "dense", "entries": np.eye(3).tolist()})
    code, text = run("norms", "--op", spec, "--n-max", "10")
    assert code == EXIT_OK
    np.testing.assert_allclose(read_csv(text), 1.0)


def test_norms_assani_linear():
    code, text = run("norms", "--op", "assani", "--n-max", "100")
    v = read_csv(text)
    assert code == EXIT_OK and len(v) == 101
    np.testing.assert_allclose(np.diff(v)[50:], 2.0, atol=1e-3)


def test_norms_spec_file_and_params(tmp_path):
    path = tmp_path / "op.json"
    path.write_text(json.dumps({"gallery": "delta_shift", "params": {"dim": 10}}))
    code, text = run("norms", "--op", str(path), "--n-max", "12")
    assert code == EXIT_OK and read_csv(text)[11] == 0.0
    code, text = run("norms", "--op", "delta_shift", "--param", "delta=0.5", "--n-max", "3")
    np.testing.assert_allclose(read_csv(text), np.arange(1, 5) ** 0.25)
    assert run("norms", "--op", "delta_shift", "--param", "delta")[0] == EXIT_USAGE
    assert run("norms", "--op", "nowhere.json")[0] == EXIT_USAGE


def test_constant_kreiss_unitary():
    code, text = run("constant", "--kind", "kreiss", "--op", "diagonal_unitary")
    d = json.loads(text)
    assert code == EXIT_OK and d["value"] == 1 and d["bound"] == "exact"


def test_constant_kreiss_assani_flag(tmp_path):
    path = tmp_path / "k.json"
    code, _ = run("constant", "--kind", "kreiss", "--op", "assani", "--out", str(path))
    d = json.loads(path.read_text())
    assert code == EXIT_OK and "unbounded_suspected" in d["flags"] and d["bound"] == "lower"


def test_constant_cesaro_square_profile():
    code, text = run("constant", "--kind", "cesaro_square", "--op", "delta_shift",
                     "--param", "dim=128", "--n-max", "64", "--profile")
    d = json.loads(text)
    assert code == EXIT_OK and len(d["profile"]) == 64
    assert np.all(np.isfinite(d["profile"]))


@pytest.mark.parametrize("kind", ["strong_kreiss", "absolute_strong_kreiss", "uniform_kreiss",
                                  "abs_cesaro", "p_abs_cesaro", "strongly_cesaro", "abel_bound",
                                  "cesaro"])
def test_constant_all_kinds(kind):
    code, text = run("constant", "--kind", kind, "--op", "jordan_unimodular", "--n-max", "16",
                     "--samples", "2", "--angles", "4")
    assert code == EXIT_OK and json.loads(text)["kind"] == kind


def test_constant_numeric_failure():
    code, _ = run("constant", "--kind", "strong_kreiss", "--op", "assani", "--radii", "400")
    assert code == EXIT_NUMERIC


def test_constant_bad_values():
    assert run("constant", "--kind", "kreiss", "--op", "assani", "--radii", "0.5")[0] == EXIT_USAGE
    assert run("constant", "--kind", "bogus", "--op", "assani")[0] == EXIT_USAGE


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_max": 3}))
    code, text = run("--config", str(cfg), "norms", "--op", "assani")
    assert code == EXIT_OK and len(read_csv(text)) == 4


def test_verify_unknown_suite():
    assert run("verify", "--suite", "nope")[0] == EXIT_USAGE
    assert run("verify", "--only", "99")[0] == EXIT_USAGE


def test_verify_subset_and_report(tmp_path):
    path = tmp_path / "r.json"
    code, text = run("verify", "--only", "1,8,9", "--out", str(path))
    assert code == EXIT_OK and "3/3 criteria passed" in text
    rep = json.loads(path.read_text())
    assert [c["number"] for c in rep["criteria"]] == [1, 8, 9]
    assert rep["criteria"][1]["record"]["seed"] == 0


def test_verify_quick_exit_code_matches_lines():
    code, text = run("verify", "--quick")
    lines = [ln for ln in text.splitlines() if ln.startswith("[")]
    assert len(lines) == 12
    all_pass = all(ln.startswith("[PASS]") for ln in lines)
    assert code == (EXIT_OK if all_pass else EXIT_FAIL)
    assert "(quick mode)" in text


def test_verify_worker_pool(monkeypatch):
    monkeypatch.setenv("KREISSLAB_THREADS", "2")
    code, text = run("verify", "--only", "1,8")
    assert code == EXIT_OK and text.count("[PASS]") == 2
    monkeypatch.setenv("KREISSLAB_THREADS", "zero")
    assert run("verify", "--only", "1")[0] == EXIT_USAGE


@pytest.mark.parametrize("number", [8, 12])
def test_records_reproduce_bit_for_bit(number):
    a = run_criterion(number).record.to_dict()
    b = run_criterion(number).record.to_dict()
    a.pop("wall_time")
    b.pop("wall_time")
    assert json.dumps(a) == json.dumps(b)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "kreisslab", "gallery", "list"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "shields" in res.stdout
