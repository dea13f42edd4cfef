"""Command-line entry point: ``kreisslab {gallery,norms,constant,verify}``.

Exit codes: 0 success, 1 acceptance criteria failed, 2 usage error,
3 numeric failure (non-convergence, overflow, uncertifiable tail).
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import constants as C
from .errors import CertificateError, ConvergenceError, OverflowBudgetError, SingularSolveError
from .experiments import REGISTRY, SUITES, run_criterion
from .norms import power_norms
from .operators import GALLERY, from_dict, gallery

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
THREADS_ENV = "KREISSLAB_THREADS"
NUMERIC_ERRORS = (ConvergenceError, OverflowBudgetError, CertificateError, SingularSolveError,
                  FloatingPointError, np.linalg.LinAlgError)


class UsageError(Exception):
    pass


def _parse_value(s):
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def resolve_operator(spec, params=()):
    """``spec`` is a gallery name, a path to a JSON spec file, or inline JSON."""
    kw = {}
    for item in params:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        kw[key] = _parse_value(val)
    try:
        if spec in GALLERY:
            return gallery(spec, **kw)
        if spec.lstrip().startswith("{"):
            d = json.loads(spec)
        elif os.path.exists(spec):
            with open(spec) as fh:
                d = json.load(fh)
        else:
            raise UsageError(f"unknown operator {spec!r}; gallery entries: {', '.join(GALLERY)}")
        if kw:
            d = {"gallery": d["gallery"], "params": {**d.get("params", {}), **kw}}
        return from_dict(d)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _floats(s):
    return None if s is None else np.array([float(v) for v in str(s).split(",")])


def cmd_gallery(args, out):
    if args.action == "list":
        for name, (_, desc) in GALLERY.items():
            print(f"{name:18s} {desc}", file=out)
        return EXIT_OK
    if args.name not in GALLERY:
        raise UsageError(f"unknown gallery entry {args.name!r}")
    print(json.dumps(gallery(args.name).to_dict(), indent=2), file=out)
    return EXIT_OK


def cmd_norms(args, out):
    op = resolve_operator(args.op, args.param)
    seq = power_norms(op, args.n_max)
    if args.out in (None, "-"):
        seq.to_csv(out)
    else:
        with open(args.out, "w", newline="") as fh:
            seq.to_csv(fh)
    return EXIT_OK


def estimate_constant(op, kind, a):
    """Route a ``constant`` invocation to the matching estimator."""
    if kind == "kreiss":
        radii = _floats(a.radii)
        return C.kreiss_constant(op, radii, a.angles if a.angles is not None else 256)
    if kind in ("strong_kreiss", "absolute_strong_kreiss"):
        r = _floats(a.radii) if a.radii else np.array([2.0, 4, 8, 16, 32])
        X = C.default_samples(op, a.samples, a.seed)
        mode = "absolute" if kind.startswith("absolute") else "exp"
        return C.strong_kreiss_constant(op, r, X, gamma_grid=a.angles or 1, mode=mode)
    if kind == "uniform_kreiss":
        return C.uniform_kreiss_constant(op, a.n_max, a.angles or 64)
    if kind in ("abs_cesaro", "p_abs_cesaro"):
        p = 1.0 if kind == "abs_cesaro" else a.p
        return C.p_abs_cesaro_constant(op, p, a.n_max, a.samples, a.seed, a.ascent_steps)
    if kind == "cesaro_square":
        return C.cesaro_square_constant_exact(op, a.n_max, sup=True)
    if kind == "strongly_cesaro":
        return C.strongly_cesaro_constant(op, a.n_max, seed=a.seed)
    if kind == "abel_bound":
        return C.abel_bound_constant(op, _floats(a.radii))
    if kind == "cesaro":
        return C.cesaro_constant(op, a.n_max)
    raise UsageError(f"unknown constant kind {kind!r}")


def cmd_constant(args, out):
    op = resolve_operator(args.op, args.param)
    try:
        est = estimate_constant(op, args.kind, args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    d = est.to_dict()
    if not args.profile:
        d.pop("profile", None)
    text = json.dumps(d, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text, file=out)
    return EXIT_OK


def _workers():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1")
    return n


def cmd_verify(args, out):
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; known: {', '.join(SUITES)}")
    numbers = sorted(REGISTRY) if not args.only else [int(v) for v in args.only.split(",")]
    bad = [n for n in numbers if n not in REGISTRY]
    if bad:
        raise UsageError(f"unknown criteria {bad}")
    workers = _workers()
    if workers == 1:
        results = [run_criterion(n, args.quick) for n in numbers]
    else:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(run_criterion, numbers, [args.quick] * len(numbers)))
    for r in results:
        print(r.line(), file=out)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed"
          f"{' (quick mode)' if args.quick else ''}", file=out)
    if args.out:
        report = {"suite": args.suite, "quick": args.quick,
                  "criteria": [{"number": r.number, "title": r.title, "passed": r.passed,
                                "checks": r.checks, "record": r.record.to_dict()}
                               for r in results]}
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)
    return EXIT_OK if n_pass == len(results) else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="kreisslab", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with default option values")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gallery", help="list or show gallery operators")
    g.add_argument("action", choices=["list", "show"])
    g.add_argument("name", nargs="?")
    g.set_defaults(func=cmd_gallery)

    def op_args(sp):
        sp.add_argument("--op", required=True,
                        help="gallery name, JSON spec file or inline JSON")
        sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="gallery parameter (repeatable)")

    n = sub.add_parser("norms", help="CSV of power norms ||T^n||")
    op_args(n)
    n.add_argument("--n-max", type=int, default=64)
    n.add_argument("--out", help="CSV path (default stdout)")
    n.set_defaults(func=cmd_norms)

    c = sub.add_parser("constant", help="estimate a constant, JSON report")
    op_args(c)
    c.add_argument("--kind", required=True, choices=C.KINDS)
    c.add_argument("--n-max", type=int, default=128)
    c.add_argument("--radii", help="comma separated radii (r > 1, or r in (0, 1) for abel_bound)")
    c.add_argument("--angles", type=int, help="number of angles on the circle")
    c.add_argument("--p", type=float, default=2.0)
    c.add_argument("--samples", type=int, default=32, help="random sample vectors")
    c.add_argument("--ascent-steps", type=int, default=0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--profile", action="store_true", help="include the full profile")
    c.add_argument("--out", help="also write the JSON report here")
    c.set_defaults(func=cmd_constant)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--suite", default="paper")
    v.add_argument("--quick", action="store_true", help="halve the dominant sizes")
    v.add_argument("--only", help="comma separated criterion numbers")
    v.add_argument("--out", help="JSON report with every experiment record")
    v.set_defaults(func=cmd_verify)
    return p


def _config_defaults(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def main(argv=None, out=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        cfg = _config_defaults(argv)
        if cfg:
            for action in parser._subparsers._group_actions[0].choices.values():
                action.set_defaults(**cfg)
        args = parser.parse_args(argv)
        if args.command == "gallery" and args.action == "show" and not args.name:
            raise UsageError("gallery show needs a name")
        return args.func(args, out)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"kreisslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"kreisslab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
