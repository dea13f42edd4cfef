"""Growth-law fits for norm sequences and checks of numerical lemmas."""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import SpaceError
from .norms import weighted_matrix
from .operators import apply

MODELS = {
    "power": ("beta",),
    "power_log": ("beta", "gamma"),
    "log_only": ("kappa",),
}
STABILITY_TOL = 0.05


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares fit of ``log u_n`` against ``log n`` and/or ``log log n``."""

    model: str
    exponents: dict
    intercept: float
    residual: float
    window: tuple
    stable: bool
    right_half: dict

    def predict(self, n):
        n = np.asarray(n, dtype=float)
        out = np.full(n.shape, self.intercept)
        if "beta" in self.exponents:
            out = out + self.exponents["beta"] * np.log(n)
        if "gamma" in self.exponents:
            out = out + self.exponents["gamma"] * np.log(np.log(n))
        if "kappa" in self.exponents:
            out = out + self.exponents["kappa"] * np.log(np.log(n))
        return np.exp(out)

    def to_dict(self):
        return {"model": self.model, "exponents": dict(self.exponents),
                "intercept": self.intercept, "residual": self.residual,
                "window": list(self.window), "stable": self.stable,
                "right_half": dict(self.right_half)}


def _design(model, n):
    cols = [np.ones_like(n)]
    if model in ("power", "power_log"):
        cols.append(np.log(n))
    if model in ("power_log", "log_only"):
        cols.append(np.log(np.log(n)))
    return np.column_stack(cols)


def _lstsq(model, n, u):
    X = _design(model, n)
    coef, *_ = np.linalg.lstsq(X, np.log(u), rcond=None)
    res = np.log(u) - X @ coef
    return coef, float(np.sqrt(np.mean(res**2)))


def fit_growth(seq, model="power", n_min=16, n_max=None, stability_tol=STABILITY_TOL):
    """Fit ``u_n ~ n^beta``, ``n^beta (log n)^gamma`` or ``(log n)^kappa``.

    ``seq[n]`` is ``u_n``; the window is ``n_min..n_max`` inclusive.  The fit
    is repeated on the right half of the window and flagged unstable if any
    exponent moves by more than ``stability_tol``.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {sorted(MODELS)}")
    u_all = np.asarray(seq, dtype=float)
    n_max = len(u_all) - 1 if n_max is None else int(n_max)
    if n_max > len(u_all) - 1:
        raise ValueError("window extends past the sequence")
    lo = 3 if model != "power" else 1
    if n_min < lo:
        raise ValueError(f"model {model} needs n_min >= {lo}")
    n = np.arange(n_min, n_max + 1, dtype=float)
    k = len(MODELS[model]) + 1
    if len(n) < 2 * (k + 1):
        raise ValueError(f"window [{n_min}, {n_max}] too small for model {model}")
    u = u_all[n_min:n_max + 1]
    if np.any(~np.isfinite(u)) or np.any(u <= 0):
        raise ValueError("sequence must be finite and positive on the window")
    coef, resid = _lstsq(model, n, u)
    half = len(n) // 2
    coef_r, _ = _lstsq(model, n[half:], u[half:])
    names = MODELS[model]
    exps = {nm: float(c) for nm, c in zip(names, coef[1:])}
    right = {nm: float(c) for nm, c in zip(names, coef_r[1:])}
    stable = all(abs(exps[nm] - right[nm]) <= stability_tol for nm in names)
    return GrowthFit(model, exps, float(coef[0]), resid, (int(n_min), int(n_max)), stable, right)


def write_fit_csv(fh, seq, fit):
    import csv
    w = csv.writer(fh)
    w.writerow(["n", "u_n", "fitted"])
    n = np.arange(fit.window[0], fit.window[1] + 1)
    for k, val in zip(n, fit.predict(n)):
        w.writerow([int(k), repr(float(seq[k])), repr(float(val))])


def reciprocal_sum_ratios(u):
    """``u_n S_n / n`` with ``S_n = sum_{k<=n} 1/u_k`` (``u[0]`` is ``u_1``)."""
    u = np.asarray(u, dtype=float)
    n = np.arange(1, len(u) + 1)
    return u * np.cumsum(1.0 / u) / n


def verify_reciprocal_sum_lemma(u, C=None):
    """Check ``u_n <= C 2^(1/C) u_1 n^(1-1/C)`` for sequences with ``u_n S_n <= C n``.

    ``C_min`` is the least ``C`` for which the hypothesis holds.  The
    conclusion is tested at ``C`` (default ``C_min``).
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or len(u) == 0 or np.any(~np.isfinite(u)) or np.any(u <= 0):
        raise ValueError("u must be a nonempty finite positive sequence")
    c_min = float(np.max(reciprocal_sum_ratios(u)))
    C = c_min if C is None else float(C)
    n = np.arange(1, len(u) + 1)
    bound = C * 2 ** (1 / C) * u[0] * n ** (1 - 1 / C)
    ratio = u / bound
    worst = int(np.argmax(ratio))
    return {"C_min": c_min, "C": C, "hypothesis_holds": c_min <= C * (1 + 1e-12),
            "conclusion_holds": bool(np.all(ratio <= 1 + 1e-12)),
            "worst_n": worst + 1, "worst_ratio": float(ratio[worst])}


def generate_lemma_sequences(count, length, C=2.0, seed=0, extremal_prob=0.5):
    """Random positive sequences satisfying ``u_n S_n <= C n`` by construction.

    ``u_1`` is log-uniform in [0.1, 10].  Each later term is either pushed to
    its ceiling ``(C n - 1)/S_(n-1)`` (with probability ``extremal_prob``) or
    drawn log-uniformly from two decades below it.
    """
    rng = np.random.default_rng(seed)
    out = np.empty((count, length))
    for i in range(count):
        u = np.empty(length)
        u[0] = 10 ** rng.uniform(-1, 1)
        S = 1 / u[0]
        for n in range(2, length + 1):
            cap = (C * n - 1) / S * (1 - 1e-12)
            if rng.random() < extremal_prob:
                u[n - 1] = cap
            else:
                u[n - 1] = cap * 10 ** rng.uniform(-2, 0)
            S += 1 / u[n - 1]
        out[i] = u
    return out


def stirling_ratios(N, d):
    """Smallest ratio ``LHS / RHS`` over admissible ``K`` at one ``(N, d)``.

    LHS is ``N^(N+K) / (N+K)!``, RHS ``e^(-d^2) / sqrt(d+1) * e^N / sqrt(N)``;
    ``K`` ranges over integers in ``[max(1-N, -d sqrt N), d sqrt N]``.
    """
    lo = max(1 - N, int(np.ceil(-d * np.sqrt(N))))
    hi = int(np.floor(d * np.sqrt(N)))
    K = np.arange(lo, hi + 1)
    lhs = (N + K) * np.log(N) - gammaln(N + K + 1.0)
    rhs = -d * d - 0.5 * np.log(d + 1.0) + N - 0.5 * np.log(N)
    r = np.exp(lhs - rhs)
    i = int(np.argmin(r))
    return float(r[i]), int(K[i])


def verify_stirling_bound(N_range, d_range=(1, 2)):
    """Largest ``C`` making the Stirling-type lower bound hold on the given ranges."""
    if np.ndim(N_range) == 0:
        N_range = range(1, int(N_range) + 1)
    best, arg = np.inf, None
    for d in d_range:
        for N in N_range:
            r, K = stirling_ratios(int(N), float(d))
            if r < best:
                best, arg = r, (int(N), K, d)
    return {"C_empirical": best, "argmin": {"N": arg[0], "K": arg[1], "d": arg[2]},
            "N_max": int(max(N_range)), "d_range": list(d_range)}


def adjoint_gram_constant(op, Q_max):
    """``max_{Q <= Q_max} ||sum_{k<Q} T^k T^k*|| / Q^2``: the smallest ``C`` with
    ``sum_{k<Q} ||T^k* y||^2 <= C Q^2 ||y||^2`` for all ``Q <= Q_max``."""
    if not op.space.is_hilbert:
        raise SpaceError("needs p = 2")
    A = weighted_matrix(op.matrix(), op.space)
    D = A.shape[0]
    G = np.eye(D, dtype=complex)
    best = 1.0
    for Q in range(2, Q_max + 1):
        G = np.eye(D) + A @ G @ A.conj().T
        G = (G + G.conj().T) / 2
        best = max(best, float(np.linalg.eigvalsh(G)[-1]) / Q**2)
    return best


def _dyadic_pairs(N):
    pts = [0] + [2**i for i in range(0, 64) if 2**i <= N]
    return [(P, Q) for i, P in enumerate(pts) for Q in pts[i + 1:]]


def verify_block_inequalities(op, N_max, x_samples, C=None):
    """Square-sum ratios of orbits and the dyadic block inequality.

    For each unit ``x`` and ``N <= N_max`` records ``sum_{n<N} ||T^n x||^2``
    divided by ``N^2`` (``kb_ratio``) and by ``N`` (``csb_ratio``), and checks
    ``(Q-P)^2/Q^2 ||T^N x||^2 <= C sum_{k=P}^{Q-1} ||T^(N-k) x||^2`` for
    dyadic ``0 <= P < Q <= N``.  ``C`` defaults to the exact adjoint Gram
    constant over ``Q <= N_max``, for which the inequality must hold.
    """
    X = np.asarray(x_samples, dtype=complex)
    if X.ndim == 1:
        X = X[:, None]
    X = X / op.space.norm(X)
    if C is None:
        C = adjoint_gram_constant(op, N_max)
    R = np.empty((N_max + 1, X.shape[1]))
    V = X
    for n in range(N_max + 1):
        if n:
            V = apply(op, V)
        R[n] = op.space.norm(V) ** 2
    cums = np.vstack([np.zeros(X.shape[1]), np.cumsum(R, axis=0)])
    Ns = np.arange(1, N_max + 1)
    sq = cums[1:N_max + 1]
    kb = (sq / Ns[:, None] ** 2).max(axis=1)
    csb = (sq / Ns[:, None]).max(axis=1)
    worst = 0.0
    checked = 0
    for N in Ns:
        for P, Q in _dyadic_pairs(N):
            # sum_{k=P}^{Q-1} ||T^(N-k) x||^2 = cums[N-P+1] - cums[N-Q+1]
            rhs = C * (cums[N - P + 1] - cums[N - Q + 1])
            lhs = (Q - P) ** 2 / Q**2 * R[N]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(lhs > 0, lhs / rhs, 0.0)
            worst = max(worst, float(np.max(ratio)))
            checked += 1
    return {"C": float(C), "kb_ratio": kb, "csb_ratio": csb, "pairs_checked": checked,
            "worst_block_ratio": worst, "block_holds": worst <= 1 + 1e-10}


def square_sum_profile(op, x, N_max, kappa):
    """``sum_{n<N} ||T^n x||^2 / (N log(N+1)^kappa)`` for ``N = 1..N_max``."""
    x = np.asarray(x, dtype=complex)
    x = x / op.space.norm(x)
    R = np.empty(N_max)
    v = x
    for n in range(N_max):
        if n:
            v = apply(op, v)
        R[n] = op.space.norm(v) ** 2
    N = np.arange(1, N_max + 1)
    return np.cumsum(R) / (N * np.log(N + 1.0) ** kappa)


def predicted_pacb_exponent(K, p):
    """Power bound implied by a p-absolute Cesaro constant ``K``.

    ``||T^n|| <= K 2^eps ||T|| n^(1/p - eps)`` with ``eps = 1/(p K^p)``.
    """
    if not (np.isfinite(K) and K > 0) or p < 1:
        raise ValueError("need finite K > 0 and p >= 1")
    eps = 1.0 / (p * K**p)
    return {"epsilon": eps, "exponent": 1.0 / p - eps,
            "bound_form": f"||T^n|| <= {K:g} * 2^{eps:.6g} * ||T|| * n^{1.0 / p - eps:.6g}"}


def implied_constant_lower_bound(beta, p):
    """Least ``K`` whose predicted exponent ``1/p - 1/(p K^p)`` is at least ``beta``."""
    if not 0 <= beta < 1.0 / p:
        raise ValueError("need 0 <= beta < 1/p")
    return (1.0 / (1.0 - p * beta)) ** (1.0 / p)
