"""Estimators for boundedness constants of operators.

Search-based estimators only ever produce lower bounds: every value is
attained by some explicit (lambda, n, x, signs) in the recorded scan.  The
exceptions are the Kreiss constant of a normal operator with spectrum in the
closed disc (exactly 1) and the Cesaro-square constant at a fixed ``n``
(a largest singular value).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .cesaro import raw_coefficients
from .errors import SpaceError
from .norms import POWER_CACHE_BUDGET, polynomial_norm, power_norms, weighted_matrix
from .operators import apply, is_shift_like
from .transforms import certified_truncation, cesaro_norm_profile, exp_apply

KINDS = ("kreiss", "strong_kreiss", "absolute_strong_kreiss", "uniform_kreiss",
         "abs_cesaro", "p_abs_cesaro", "cesaro_square", "strongly_cesaro",
         "abel_bound", "cesaro")
BOUNDS = ("lower", "upper", "exact")
UNBOUNDED_FACTOR = 2.0
UNBOUNDED = "unbounded_suspected"


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [_jsonable(v.real), _jsonable(v.imag)]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass(frozen=True)
class ConstantEstimate:
    kind: str
    value: float
    bound: str
    flags: tuple = ()
    scan: dict = field(default_factory=dict)
    seed: object = None
    profile: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown constant kind {self.kind!r}")
        if self.bound not in BOUNDS:
            raise ValueError(f"bound must be one of {BOUNDS}")

    @property
    def unbounded_suspected(self):
        return UNBOUNDED in self.flags

    def to_dict(self):
        return _jsonable({"kind": self.kind, "value": self.value, "bound": self.bound,
                          "flags": list(self.flags), "scan": self.scan, "seed": self.seed,
                          "profile": self.profile})

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def growth_flag(checkpoints, factor=UNBOUNDED_FACTOR):
    """Flag when a running supremum grew by ``factor`` over the last two refinements."""
    s = np.maximum.accumulate(np.asarray(checkpoints, dtype=float))
    if len(s) >= 3 and s[-3] > 0 and s[-1] / s[-3] >= factor:
        return (UNBOUNDED,)
    return ()


def angle_grid(angles):
    """Angles in radians: an explicit array, or ``k`` equispaced points on the circle."""
    if np.ndim(angles) == 0:
        k = int(angles)
        if k < 1:
            raise ValueError("need at least one angle")
        return 2 * np.pi * np.arange(k) / k
    a = np.asarray(angles, dtype=float)
    if a.size == 0:
        raise ValueError("empty angle grid")
    return a


def default_radii(m_max=64):
    m = 2 ** np.arange(int(np.log2(m_max)) + 1)
    return 1.0 + 1.0 / m


def _is_normal_contraction(op):
    if is_shift_like(op) or not op.space.is_hilbert:
        return False
    A = weighted_matrix(op.matrix(), op.space)
    comm = A @ A.conj().T - A.conj().T @ A
    scale = max(1.0, np.linalg.norm(A) ** 2)
    if np.linalg.norm(comm) > 1e-12 * scale:
        return False
    return np.max(np.abs(np.linalg.eigvals(A))) <= 1 + 1e-12


def _resolvent_norm(op, lam, A=None):
    if is_shift_like(op):
        # nilpotent truncation: the Neumann series is a finite polynomial
        n = np.arange(op.dim)
        return polynomial_norm(op, lam ** (-n - 1.0))
    D = A.shape[0]
    return float(np.linalg.norm(np.linalg.inv(lam * np.eye(D) - A), 2))


def kreiss_constant(op, radii=None, angles=256, factor=UNBOUNDED_FACTOR):
    """Lower bound on ``sup_{|lam|>1} (|lam|-1) ||R(lam, T)||`` over a polar grid.

    Radii are visited from the outermost inwards; ``profile`` holds the grid
    maximum at each radius.  Normal operators with spectral radius ``<= 1``
    get the exact value 1.
    """
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 1):
        raise ValueError("radii must be nonempty and > 1")
    radii = np.sort(radii)[::-1]
    th = angle_grid(angles)
    scan = {"radii": radii, "angles": len(th), "mode": "neumann" if is_shift_like(op) else "dense"}
    if _is_normal_contraction(op):
        return ConstantEstimate("kreiss", 1.0, "exact", (), scan)
    if not op.space.is_hilbert:
        raise SpaceError("resolvent norms need p = 2")
    A = None if is_shift_like(op) else weighted_matrix(op.matrix(), op.space)
    prof = []
    where = None
    best = -np.inf
    for rad in radii:
        vals = [(rad - 1) * _resolvent_norm(op, rad * np.exp(1j * t), A) for t in th]
        i = int(np.argmax(vals))
        prof.append(vals[i])
        if vals[i] > best:
            best, where = vals[i], complex(rad * np.exp(1j * th[i]))
    scan["argmax"] = where
    return ConstantEstimate("kreiss", float(best), "lower", growth_flag(prof, factor), scan,
                            profile=prof)


def _unit_columns(op, X):
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[:, None]
    nrm = op.space.norm(X)
    keep = nrm > 0
    return X[:, keep] / nrm[keep]


def strong_kreiss_constant(op, r_grid, x_samples, gamma_grid=1, mode="exp", tol=1e-10):
    """Lower bound on ``M = sup e^(-r) ||e^(r gamma T) x||`` over the sampled grid.

    ``x_samples`` is a ``(dim, k)`` array or a callable ``r -> array``.  With
    ``mode="absolute"`` the quantity is ``e^(-r) sum_n r^n ||T^n x|| / n!``
    instead.  ``profile`` holds ``M(r)`` for each ``r``.
    """
    if mode not in ("exp", "absolute"):
        raise ValueError("mode must be 'exp' or 'absolute'")
    r_grid = np.asarray(r_grid, dtype=float)
    th = angle_grid(gamma_grid)
    prof = []
    for r in r_grid:
        X = _unit_columns(op, x_samples(r) if callable(x_samples) else x_samples)
        if mode == "exp":
            m = 0.0
            for t in th:
                Y = exp_apply(op, r * np.exp(1j * t), X, tol=tol, scaled=True)
                m = max(m, float(np.max(op.space.norm(Y))))
        else:
            m = float(np.max(_absolute_exp_sum(op, r, X, tol)))
        prof.append(m)
    kind = "strong_kreiss" if mode == "exp" else "absolute_strong_kreiss"
    scan = {"r_grid": r_grid, "angles": len(th), "mode": mode, "tol": tol}
    return ConstantEstimate(kind, float(max(prof)), "lower", (), scan, profile=prof)


def _absolute_exp_sum(op, r, X, tol):
    norms = power_norms(op, max(op.dim, int(4 * r) + 64) if is_shift_like(op)
                        else int(4 * r) + 64).values

    def coef(n):
        return np.exp(n * np.log(r) - gammaln(n + 1.0) - r) if r > 0 else (n == 0) * 1.0

    N, _ = certified_truncation(norms, coef, lambda L: r / (L + 1.0), tol)
    c = coef(np.arange(N + 1))
    acc = np.zeros(X.shape[1])
    V = X
    for n in range(N + 1):
        if n:
            V = apply(op, V)
        acc += c[n] * op.space.norm(V)
    return acc


def _mean_coefficients(kind, n, alpha=1.0):
    if kind == "uniform":
        c = np.full(n + 1, 1.0 / n)
        c[0] = 0.0
        return c
    c = raw_coefficients(alpha - 1.0, n)[::-1] / raw_coefficients(alpha, n)[-1]
    return c


def rotated_profile(op, n_max, angles, kind="uniform", alpha=1.0, n_min=None):
    """``sup_gamma ||sum_k c_k (gamma T)^k||`` for each ``n`` in ``n_min..n_max``.

    ``kind="uniform"``: ``c = (1/n) [0, 1, ..., 1]``.  ``kind="mean"``: the
    Cesaro mean ``M_n^(alpha)``.  Returns ``(n, sup over angles, argmax angle)``.
    """
    th = angle_grid(angles)
    if n_min is None:
        n_min = 1 if kind == "uniform" else 0
    ns = np.arange(n_min, n_max + 1)
    best = np.zeros(len(ns))
    arg = np.zeros(len(ns))
    if is_shift_like(op):
        for t in th:
            g = np.exp(1j * t)
            v = None
            for i, n in enumerate(ns):
                c = _mean_coefficients(kind, n, alpha) * g ** np.arange(n + 1)
                val, vec = polynomial_norm(op, c, v0=v, return_vector=True)
                v = vec if vec is not None else v
                if val > best[i]:
                    best[i], arg[i] = val, t
        return ns, best, arg
    if not op.space.is_hilbert:
        raise SpaceError("operator norms need p = 2")
    A0 = weighted_matrix(op.matrix(), op.space)
    D = A0.shape[0]
    if (n_max + 1) * D * D > POWER_CACHE_BUDGET:
        raise MemoryError("power stack exceeds the cache budget")
    C = np.zeros((len(ns), n_max + 1))
    for i, n in enumerate(ns):
        C[i, :n + 1] = _mean_coefficients(kind, n, alpha)
    for t in th:
        A = np.exp(1j * t) * A0
        P = np.empty((n_max + 1, D, D), dtype=complex)
        P[0] = np.eye(D)
        for k in range(1, n_max + 1):
            P[k] = A @ P[k - 1]
        vals = np.linalg.norm(np.tensordot(C, P, axes=(1, 0)), 2, axis=(1, 2))
        upd = vals > best
        best[upd], arg[upd] = vals[upd], t
    return ns, best, arg


def _dyadic_checkpoints(ns, values):
    ns = np.asarray(ns)
    run = np.maximum.accumulate(values)
    pts = [n for n in 2 ** np.arange(0, 40) if ns[0] <= n <= ns[-1]]
    if not pts or pts[-1] != ns[-1]:
        pts.append(int(ns[-1]))
    idx = np.searchsorted(ns, pts)
    return pts, run[idx]


def uniform_kreiss_constant(op, n_max, angles=64, factor=UNBOUNDED_FACTOR):
    """Lower bound on ``sup_{gamma, n} ||(1/n) sum_{k=1}^n (gamma T)^k||``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    ns, best, arg = rotated_profile(op, n_max, angles, kind="uniform")
    i = int(np.argmax(best))
    pts, run = _dyadic_checkpoints(ns, best)
    scan = {"n_max": n_max, "angles": len(angle_grid(angles)), "argmax_n": int(ns[i]),
            "argmax_angle": float(arg[i]), "checkpoints": pts}
    return ConstantEstimate("uniform_kreiss", float(best[i]), "lower",
                            growth_flag(run, factor), scan, profile=best)


def orbit_norm_matrix(op, X, n_max):
    """``||T^n x_j||`` as an ``(n_max + 1, k)`` array for the columns of ``X``."""
    X = np.asarray(X, dtype=complex)
    out = np.empty((n_max + 1, X.shape[1]))
    V = X
    for n in range(n_max + 1):
        if n:
            V = apply(op, V)
        out[n] = op.space.norm(V)
    return out


def p_abs_profile(op, X, p, n_max):
    """``((1/n) sum_{k<n} ||T^k x||^p)^(1/p)`` for ``n = 1..n_max``, per column of ``X``."""
    R = orbit_norm_matrix(op, X, n_max - 1) ** p
    n = np.arange(1, n_max + 1)[:, None]
    return (np.cumsum(R, axis=0) / n) ** (1.0 / p)


def default_samples(op, n_random=32, seed=0, n_coordinate=1024):
    """Coordinate vectors followed by seeded random complex vectors.

    The random block is prefix-stable: asking for more vectors with the same
    seed only appends columns.
    """
    D = op.dim
    E = np.eye(D, min(D, n_coordinate), dtype=complex)
    rng = np.random.default_rng(seed)
    cols = [rng.standard_normal(D) + 1j * rng.standard_normal(D) for _ in range(n_random)]
    R = np.array(cols).T if cols else np.zeros((D, 0), dtype=complex)
    return _unit_columns(op, np.hstack([E, R]))


def _ascend(op, x, score, steps, rng, step0=0.5):
    # random-direction hill climb; the step halves after each rejected move
    best = score(x)
    t = step0
    for _ in range(steps):
        xi = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
        y = x + t * np.max(np.abs(x)) * xi / np.linalg.norm(xi)
        y = y / op.space.norm(y)
        s = score(y)
        if s > best:
            x, best = y, s
        else:
            t /= 2
    return x, best


def p_abs_cesaro_constant(op, p, n_max, n_random=32, seed=0, ascent_steps=0,
                          ascent_starts=4, samples=None):
    """Lower bound on ``K_{p-ac}`` over sampled unit vectors and ``n <= n_max``.

    ``profile[n-1]`` is the best value found at ``n``; its running maximum is
    the estimate for every smaller ``n_max``.  With ``ascent_steps > 0`` the
    best starting vectors are refined by a seeded random hill climb.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    X = default_samples(op, n_random, seed) if samples is None else _unit_columns(op, samples)
    F = p_abs_profile(op, X, p, n_max)
    prof = F.max(axis=1)
    if ascent_steps > 0:
        rng = np.random.default_rng(seed + 1)
        top = np.argsort(F.max(axis=0))[::-1][:ascent_starts]
        for j in top:
            def score(x):
                return float(np.max(p_abs_profile(op, x[:, None], p, n_max)))
            x, _ = _ascend(op, X[:, j], score, ascent_steps, rng)
            prof = np.maximum(prof, p_abs_profile(op, x[:, None], p, n_max)[:, 0])
    kind = "abs_cesaro" if p == 1 else "p_abs_cesaro"
    scan = {"p": p, "n_max": n_max, "samples": X.shape[1], "ascent_steps": ascent_steps,
            "ascent_starts": ascent_starts if ascent_steps else 0}
    pts, run = _dyadic_checkpoints(np.arange(1, n_max + 1), prof)
    scan["checkpoints"] = pts
    return ConstantEstimate(kind, float(prof.max()), "lower", growth_flag(run), scan,
                            seed=seed, profile=prof)


def cesaro_square_profile(op, n_max):
    """``sqrt(lambda_max((1/n) sum_{k<n} T^k* T^k))`` for ``n = 1..n_max``.

    This is the norm of the stacked column ``(T^0; ...; T^(n-1)) / sqrt(n)``;
    the Gram sum follows ``H_(n+1) = I + T* H_n T``.
    """
    if not op.space.is_hilbert:
        raise SpaceError("Cesaro-square constant needs p = 2")
    A = weighted_matrix(op.matrix(), op.space)
    D = A.shape[0]
    if D * D > POWER_CACHE_BUDGET:
        raise MemoryError("Gram matrix exceeds the memory budget")
    H = np.eye(D, dtype=complex)
    out = np.empty(n_max)
    AH = A.conj().T
    for n in range(1, n_max + 1):
        if n > 1:
            H = np.eye(D) + AH @ H @ A
        H = (H + H.conj().T) / 2
        lam = np.linalg.eigvalsh(H)[-1]
        out[n - 1] = np.sqrt(max(lam, 0.0) / n)
    return out


def cesaro_square_constant_exact(op, n, sup=False):
    """Cesaro-square value at ``n`` (exact), or its sup over ``1..n`` (lower bound)."""
    prof = cesaro_square_profile(op, n)
    if sup:
        return ConstantEstimate("cesaro_square", float(prof.max()), "lower", (),
                                {"n_max": n, "argmax_n": int(np.argmax(prof)) + 1}, profile=prof)
    return ConstantEstimate("cesaro_square", float(prof[-1]), "exact", (), {"n": n}, profile=prof)


def _signed_norm_fn(op, X=None):
    if op.space.is_hilbert:
        return lambda c: polynomial_norm(op, c)
    if X is None:
        X = default_samples(op, 8)

    def f(c):
        acc = c[0] * X
        V = X
        for k in range(1, len(c)):
            V = apply(op, V)
            acc = acc + c[k] * V
        return float(np.max(op.space.norm(acc)))
    return f


def strongly_cesaro_constant(op, n_max, trials=4, seed=0, greedy_passes=1, n_values=None):
    """Lower bound on ``sup ||(1/n) sum_{k<n} g_k T^k||`` over signs ``g_k = +-1``.

    For each ``n`` (dyadic by default) the search starts from constant,
    alternating and ``trials`` random sign patterns, then flips single signs
    while that improves the norm.  The best signs are kept in ``scan``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    if n_values is None:
        n_values = [int(n) for n in 2 ** np.arange(0, 40) if n <= n_max]
        if n_values[-1] != n_max:
            n_values.append(int(n_max))
    norm = _signed_norm_fn(op)
    prof, signs = [], {}
    for n in n_values:
        starts = [np.ones(n), (-1.0) ** np.arange(n)]
        starts += [rng.choice([-1.0, 1.0], size=n) for _ in range(trials)]
        best_v, best_s = -1.0, None
        for s in starts:
            v = norm(s / n)
            for _ in range(greedy_passes):
                improved = False
                for k in range(n):
                    s[k] = -s[k]
                    w = norm(s / n)
                    if w > v:
                        v, improved = w, True
                    else:
                        s[k] = -s[k]
                if not improved:
                    break
            if v > best_v:
                best_v, best_s = v, s.copy()
        prof.append(best_v)
        signs[n] = best_s.astype(int).tolist()
    scan = {"n_values": n_values, "trials": trials, "greedy_passes": greedy_passes,
            "best_signs": signs}
    return ConstantEstimate("strongly_cesaro", float(max(prof)), "lower",
                            growth_flag(np.maximum.accumulate(prof)), scan, seed=seed,
                            profile=prof)


def default_abel_radii(j_max=10):
    return 1.0 - 2.0 ** -np.arange(1, j_max + 1)


def abel_bound_constant(op, r_grid=None):
    """Lower bound on ``sup_r ||A_r(T)||``, ``A_r = (1-r) sum r^n T^n``."""
    r_grid = default_abel_radii() if r_grid is None else np.asarray(r_grid, dtype=float)
    if np.any((r_grid <= 0) | (r_grid >= 1)):
        raise ValueError("radii must lie in (0, 1)")
    prof = []
    if is_shift_like(op):
        n = np.arange(op.dim)
        for r in r_grid:
            prof.append(polynomial_norm(op, (1 - r) * r ** n))
    else:
        A = weighted_matrix(op.matrix(), op.space)
        rho = np.max(np.abs(np.linalg.eigvals(A)))
        D = A.shape[0]
        for r in r_grid:
            if r * rho >= 1:
                raise ValueError(f"Abel mean undefined at r = {r}: r * spectral radius >= 1")
            prof.append((1 - r) * float(np.linalg.norm(np.linalg.inv(np.eye(D) - r * A), 2)))
    scan = {"r_grid": r_grid}
    return ConstantEstimate("abel_bound", float(max(prof)), "lower", growth_flag(prof), scan,
                            profile=prof)


def cesaro_constant(op, n_max, normalization="ergodic_average"):
    """Lower bound on ``sup_n ||(1/n) sum_{k<n} T^k||`` (or the ``n + 1`` term mean)."""
    prof = cesaro_norm_profile(op, 1.0, n_max)
    if normalization == "ergodic_average":
        # (1/n) sum_{k<n} T^k is the (n-1)-th order-1 mean
        ns = np.arange(1, n_max + 2)
    elif normalization == "divide_by_A":
        ns = np.arange(0, n_max + 1)
    else:
        raise ValueError("normalization must be ergodic_average or divide_by_A")
    pts, run = _dyadic_checkpoints(np.arange(1, len(prof) + 1), prof)
    scan = {"n_max": n_max, "normalization": normalization, "index": [int(ns[0]), int(ns[-1])]}
    return ConstantEstimate("cesaro", float(prof.max()), "lower", growth_flag(run), scan,
                            profile=prof)
