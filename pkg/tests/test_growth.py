import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kreisslab.growth import (adjoint_gram_constant, fit_growth, generate_lemma_sequences,
                              implied_constant_lower_bound, predicted_pacb_exponent,
                              reciprocal_sum_ratios, square_sum_profile, stirling_ratios,
                              verify_block_inequalities, verify_reciprocal_sum_lemma,
                              verify_stirling_bound, write_fit_csv)
from kreisslab.norms import power_norms, shift_power_norm
from kreisslab.operators import WeightedSpace, dense, gallery


def test_fit_delta_shift_exponent():
    sp = WeightedSpace(2, "poly", 0.8)
    seq = [shift_power_norm(sp, n) for n in range(513)]
    fit = fit_growth(seq, "power", 16, 512)
    assert fit.exponents["beta"] == pytest.approx(0.4, abs=0.02)
    assert fit.stable


def test_fit_on_computed_norms():
    seq = power_norms(gallery("delta_shift", dim=300), 256).values
    assert fit_growth(seq, "power", 16).exponents["beta"] == pytest.approx(0.4, abs=0.02)


def test_fit_log_model():
    n = np.arange(0, 2000, dtype=float)
    seq = np.log(n + 2) ** 1.5
    fit = fit_growth(seq, "log_only", 16)
    assert fit.exponents["kappa"] == pytest.approx(1.5, abs=0.05)


def test_fit_power_log_exact():
    n = np.arange(0, 600, dtype=float)
    seq = np.where(n > 1, n**0.5 * np.log(np.maximum(n, 2)) ** -0.5, 1.0)
    fit = fit_growth(seq, "power_log", 16)
    assert fit.exponents["beta"] == pytest.approx(0.5, abs=1e-9)
    assert fit.exponents["gamma"] == pytest.approx(-0.5, abs=1e-8)
    assert fit.residual < 1e-10


def test_unstable_flag():
    n = np.arange(0, 400, dtype=float)
    seq = np.where(n < 100, n + 1.0, 101.0)  # linear then flat
    assert not fit_growth(seq, "power", 16).stable


@pytest.mark.parametrize("kw", [dict(model="cubic"), dict(n_min=1, model="log_only"),
                                dict(n_min=16, n_max=18), dict(n_max=5000)])
def test_fit_errors(kw):
    with pytest.raises(ValueError):
        fit_growth(np.ones(100) * 2, **kw)


def test_fit_rejects_nonpositive():
    with pytest.raises(ValueError):
        fit_growth(np.zeros(100), "power", 16)


def test_write_fit_csv():
    seq = (np.arange(100) + 1.0) ** 0.3
    fit = fit_growth(seq, "power", 16)
    buf = io.StringIO()
    write_fit_csv(buf, seq, fit)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "n,u_n,fitted" and len(lines) == 1 + 99 - 16 + 1


def test_reciprocal_ratios_constant_sequence():
    np.testing.assert_allclose(reciprocal_sum_ratios(np.full(10, 3.0)), 1.0)


def test_lemma_on_extremal_sequence():
    # every term sits at its ceiling, so the hypothesis holds with equality
    seqs = generate_lemma_sequences(1, 300, C=2.0, seed=0, extremal_prob=1.0)
    rep = verify_reciprocal_sum_lemma(seqs[0], C=2.0)
    assert rep["hypothesis_holds"] and rep["conclusion_holds"]
    assert rep["worst_ratio"] > 0.5


def test_lemma_reports_violated_hypothesis():
    u = np.array([1.0, 100.0, 1.0])
    rep = verify_reciprocal_sum_lemma(u, C=2.0)
    assert not rep["hypothesis_holds"] and rep["C_min"] > 2
    with pytest.raises(ValueError):
        verify_reciprocal_sum_lemma([1.0, -1.0])


@given(st.floats(1.0, 5.0), st.integers(0, 2**31 - 1), st.floats(0, 1))
def test_lemma_property(C, seed, p):
    u = generate_lemma_sequences(1, 80, C=C, seed=seed, extremal_prob=p)[0]
    rep = verify_reciprocal_sum_lemma(u, C=C)
    assert rep["hypothesis_holds"]
    assert rep["conclusion_holds"]


def test_stirling_against_exact_factorials():
    # one (N, d) pair recomputed with integer factorials
    N, d = 30, 1.0
    r, K = stirling_ratios(N, d)
    lo, hi = max(1 - N, math.ceil(-d * math.sqrt(N))), math.floor(d * math.sqrt(N))
    rhs = math.exp(-d * d) / math.sqrt(d + 1) * math.exp(N) / math.sqrt(N)
    ref = min(N ** (N + k) / math.factorial(N + k) / rhs for k in range(lo, hi + 1))
    assert r == pytest.approx(ref, rel=1e-11)


def test_stirling_constant_stable():
    a = verify_stirling_bound(300)["C_empirical"]
    b = verify_stirling_bound(600)["C_empirical"]
    assert a > 0 and abs(b - a) / a <= 0.1


def test_adjoint_gram_unitary():
    assert adjoint_gram_constant(gallery("diagonal_unitary"), 50) == pytest.approx(1.0)


def test_block_inequalities(rng):
    op = gallery("jordan_unimodular", angle=0.2)
    X = rng.standard_normal((2, 5))
    rep = verify_block_inequalities(op, 64, X)
    assert rep["block_holds"] and rep["pairs_checked"] > 0
    # Jordan block orbits grow linearly: square sums ~ N^3, so the /N^2 ratio grows too
    assert rep["kb_ratio"][-1] > rep["kb_ratio"][7]


def test_square_sum_profile_unitary():
    prof = square_sum_profile(gallery("diagonal_unitary"), np.ones(4), 10, 0.0)
    np.testing.assert_allclose(prof, 1.0)


def test_pacb_helpers():
    d = predicted_pacb_exponent(2.0, 2)
    assert d["epsilon"] == pytest.approx(1 / 8) and d["exponent"] == pytest.approx(3 / 8)
    assert implied_constant_lower_bound(0.4, 2) == pytest.approx(math.sqrt(5))
    with pytest.raises(ValueError):
        implied_constant_lower_bound(0.6, 2)
    with pytest.raises(ValueError):
        predicted_pacb_exponent(math.inf, 2)


@given(st.floats(0.05, 1.5), st.floats(-1.0, 1.0), st.floats(0.1, 10))
def test_planted_exponent_recovery(beta, gamma_, scale):
    n = np.arange(0, 1025, dtype=float)
    seq = scale * np.maximum(n, 3) ** beta * np.log(np.maximum(n, 3)) ** gamma_
    fit = fit_growth(seq, "power_log", 16)
    assert fit.exponents["beta"] == pytest.approx(beta, abs=1e-8)
    assert fit.exponents["gamma"] == pytest.approx(gamma_, abs=1e-7)
    assert fit.stable


@given(st.floats(0.05, 1.5), st.integers(0, 2**31 - 1))
def test_noisy_power_recovery(beta, seed):
    r = np.random.default_rng(seed)
    n = np.arange(0, 2049, dtype=float)
    seq = (n + 1) ** beta * np.exp(0.01 * r.standard_normal(len(n)))
    fit = fit_growth(seq, "power", 64)
    assert fit.exponents["beta"] == pytest.approx(beta, abs=0.02)


def test_dense_fit_assani_linear():
    seq = power_norms(dense([[-1.0, 2.0], [0.0, -1.0]]), 256).values
    assert fit_growth(seq, "power", 16).exponents["beta"] == pytest.approx(1.0, abs=0.02)
