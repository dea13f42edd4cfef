"""Cesaro means of order alpha, Abel means, resolvents and exponentials.

Series are truncated with a certified tail: the terms inside the norm table
are summed directly, and past its end ``||T^(qm+s)|| <= ||T^m||^q ||T^s||``
bounds the remainder.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import gammaln

from .cesaro import raw_coefficients
from .errors import CertificateError, OverflowBudgetError, SingularSolveError
from .norms import (OVERFLOW_LIMIT, polynomial_norm, power_norms,
                    weighted_matrix)
from .operators import _as_vector, apply, is_shift_like

NORMALIZATIONS = ("divide_by_A", "raw_sum", "ergodic_average")
EXP_BUDGET = 700.0
SOLVE_RESIDUAL = 1e-10


@dataclass(frozen=True)
class MeanSpec:
    """Which mean to form.

    ``divide_by_A``: ``M_n^(alpha) = S_n^alpha / A_n^alpha`` (order 1 averages
    ``n + 1`` powers ``T^0..T^n``).  ``raw_sum``: ``S_n^alpha``.
    ``ergodic_average``: ``(1/n) sum_{k<n} T^k``, order 1 only, ``n >= 1``.
    """

    alpha: float
    n: int
    normalization: str = "divide_by_A"

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if not self.alpha >= 0:
            raise ValueError("alpha must be >= 0")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.normalization == "ergodic_average" and (self.alpha != 1 or self.n < 1):
            raise ValueError("ergodic_average needs alpha = 1 and n >= 1")

    def coefficients(self):
        """``c_k`` with the mean equal to ``sum_k c_k T^k``."""
        if self.normalization == "ergodic_average":
            return np.full(self.n, 1.0 / self.n)
        c = raw_coefficients(self.alpha - 1.0, self.n)[::-1].copy()
        if self.normalization == "divide_by_A":
            c /= raw_coefficients(self.alpha, self.n)[-1]
        return c


def cesaro_mean_apply(op, spec, x):
    """Apply the mean described by ``spec`` to ``x`` in one pass over the orbit."""
    c = spec.coefficients()
    v = np.asarray(_as_vector(op, x), dtype=complex)
    acc = c[0] * v
    for k in range(1, len(c)):
        with np.errstate(over="ignore", invalid="ignore"):
            v = apply(op, v)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v), initial=0) > OVERFLOW_LIMIT:
            raise OverflowBudgetError(f"orbit overflow at k = {k}")
        acc = acc + c[k] * v
    return acc


def power_sum(matrix, n):
    """``sum_{k<n} T^k`` for a dense matrix by binary doubling (``O(log n)`` products)."""
    T = np.asarray(matrix, dtype=complex)
    D = T.shape[0]
    S = np.zeros_like(T)
    P = np.eye(D, dtype=complex)
    for bit in bin(int(n))[2:]:
        S = S + P @ S
        P = P @ P
        if bit == "1":
            S = S + P
            P = P @ T
    return S


def _power_stack(A, n_max):
    D = A.shape[0]
    P = np.empty((n_max + 1, D, D), dtype=complex)
    P[0] = np.eye(D)
    for k in range(1, n_max + 1):
        P[k] = A @ P[k - 1]
    return P


def cesaro_norm_profile(op, alpha, n_max, gamma=1.0, normalization="divide_by_A"):
    """``||M_n^(alpha)(gamma T)||`` (or ``||S_n^alpha||``) for ``n = 0..n_max``.

    Shift-like operators are handled matrix-free with warm-started Lanczos;
    others build the power stack once and apply the Toeplitz matrix of
    coefficients ``A_{n-k}^(alpha-1)`` to it.
    """
    if normalization not in ("divide_by_A", "raw_sum"):
        raise ValueError("profile supports divide_by_A and raw_sum")
    g = complex(gamma)
    out = np.empty(n_max + 1)
    if is_shift_like(op):
        v = None
        for n in range(n_max + 1):
            c = MeanSpec(alpha, n, normalization).coefficients() * g ** np.arange(n + 1)
            out[n], vec = polynomial_norm(op, c, v0=v, return_vector=True)
            if vec is not None:
                v = vec
        return out
    A = weighted_matrix(op.matrix(), op.space) * g
    S = _power_stack(A, n_max)
    if float(alpha).is_integer():
        # S_n^a = sum_{m<=n} S_m^(a-1)
        for _ in range(int(alpha)):
            S = np.cumsum(S, axis=0)
    else:
        low = raw_coefficients(alpha - 1.0, n_max)
        S = np.tensordot(np.tril(toeplitz(low)), S, axes=(1, 0))
    out = np.linalg.norm(S, 2, axis=(1, 2))
    if normalization == "divide_by_A":
        out = out / raw_coefficients(alpha, n_max)
    return out


def _principal_power(z, alpha):
    # (1 - z)^(-alpha) on the principal branch
    return np.exp(-alpha * np.log(1.0 - complex(z)))


def _scalar_tails(alpha, az, N, extra=None):
    """``t[m] = sum_{j>m} A_j^(alpha-1) |z|^j`` for ``m = 0..N``."""
    if alpha == 0:
        return np.zeros(N + 1)
    if extra is None:
        extra = int(np.ceil((50 + alpha * np.log(N + 2)) / -np.log(az))) + 10
    J = N + extra
    a = raw_coefficients(alpha - 1.0, J) * az ** np.arange(J + 1)
    q = az * max(1.0, (alpha + J) / (J + 1))
    rest = a[-1] * q / (1 - q)
    rev = np.cumsum(a[::-1])[::-1]
    return np.append(rev[1:], 0.0)[:N + 1] + rest


def generating_identity_residual(op, alpha, z, N, tol=1e-9, norms=None):
    """Compare ``sum_{n<=N} S_n^alpha z^n`` with ``(1-z)^(-alpha) sum_{n<=N} z^n T^n``.

    Returns ``(residual, tail_bound)``: the weighted 2-norm of the difference
    and the analytic bound on it coming from the truncation of both series.
    Raises CertificateError if ``tail_bound > tol``.
    """
    az = abs(z)
    if not az < 1:
        raise ValueError("need |z| < 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if norms is None:
        norms = power_norms(op, N).values
    v = np.asarray(norms, dtype=float)[:N + 1]
    t = _scalar_tails(alpha, az, N)
    k = np.arange(N + 1)
    tail_bound = float(np.sum(az ** k * v * t[N - k]))
    if tail_bound > tol:
        need = int(np.ceil(np.log(tol) / np.log(az))) if az > 0 else 1
        raise CertificateError(f"tail bound {tail_bound:.3g} exceeds tol at N = {N}",
                               required_terms=need)
    A = weighted_matrix(op.matrix(), op.space)
    D = A.shape[0]
    low = raw_coefficients(alpha - 1.0, N)
    lhs = np.zeros((D, D), dtype=complex)
    geo = np.zeros((D, D), dtype=complex)
    P = np.eye(D, dtype=complex)
    zp = 1.0 + 0j
    # sum_n z^n S_n = sum_k z^k T^k * sum_{j<=N-k} A_j^(alpha-1) z^j
    partial = np.cumsum(low * complex(z) ** np.arange(N + 1))
    for kk in range(N + 1):
        lhs += zp * partial[N - kk] * P
        geo += zp * P
        P = P @ A
        zp *= z
    rhs = _principal_power(z, alpha) * geo
    residual = float(np.linalg.norm(lhs - rhs, 2))
    return residual, tail_bound


def _beyond_table(v, coef, R):
    """Bound on ``sum_{n>L} coef(n) ||T^n||`` from ``||T^(qm+s)|| <= ||T^m||^q ||T^s||``.

    ``R`` bounds ``coef(n+1)/coef(n)`` for ``n >= L``.  Several block lengths
    ``m`` are tried and the smallest bound is kept.
    """
    L = len(v) - 1
    k = np.arange(1, L + 1)
    with np.errstate(divide="ignore"):
        m_root = int(k[np.argmin(v[1:] ** (1.0 / k))])
    cands = {L, m_root} | {2**i for i in range(int(np.log2(L)) + 1)}
    best = np.inf
    for m in sorted(cands):
        if v[m] == 0:
            return 0.0
        g = R**m * v[m]
        if not g < 1:
            continue
        s = np.arange(m)
        q0 = (L - s) // m + 1
        with np.errstate(divide="ignore", under="ignore", invalid="ignore"):
            logs = np.log(v[s]) + np.log(coef(q0 * m + s)) + q0 * np.log(v[m])
            val = float(np.sum(np.exp(logs))) / (1 - g)
        best = min(best, val)
    return best


def certified_truncation(values, coef, ratio, tol):
    """Smallest ``N`` with ``sum_{n>N} coef(n) ||T^n|| <= tol``.

    ``values`` is a norm table ``||T^0..T^L||``; ``ratio(L)`` bounds
    ``coef(n+1)/coef(n)`` for ``n >= L`` and controls the part of the series
    past the table.  Returns ``(N, tail)`` or raises CertificateError.
    """
    v = np.asarray(values, dtype=float)
    L = len(v) - 1
    if L < 1:
        raise ValueError("norm table needs at least two entries")
    beyond = _beyond_table(v, coef, ratio(L))
    if not np.isfinite(beyond):
        raise CertificateError("series not certified: norm table too short for the "
                               "coefficient decay", required_terms=None)
    n = np.arange(L + 1)
    with np.errstate(under="ignore", invalid="ignore"):
        terms = np.nan_to_num(coef(n) * v)
    tails = np.append(np.cumsum(terms[::-1])[::-1][1:], 0.0) + beyond
    ok = np.nonzero(tails <= tol)[0]
    if len(ok) == 0:
        raise CertificateError(f"tail {tails[-1]:.3g} above tol even with the full table",
                               required_terms=None)
    N = int(ok[0])
    return N, float(tails[N])


def _norm_table(op, length):
    if is_shift_like(op) or type(op).__name__ == "ShieldsPolynomial":
        return power_norms(op, max(length, op.dim)).values
    return power_norms(op, length).values


def _default_table_length(decay):
    # covers the effective length of a geometric series with ratio `decay`
    return int(min(2**17, max(256, 50 / max(1 - decay, 1e-12))))


def _series_apply(op, x, coef_signed, N):
    v = np.asarray(x, dtype=complex)
    acc = coef_signed(0) * v
    for n in range(1, N + 1):
        v = apply(op, v)
        acc = acc + coef_signed(n) * v
    return acc


def abel_mean_apply(op, r, x, tol=1e-12, mode="series", norms=None):
    """``A_r x = (1 - r) sum_n r^n T^n x``.

    ``mode="series"`` truncates with a certified tail ``<= tol``;
    ``mode="solve"`` returns ``(1 - r)(I - rT)^(-1) x`` by a dense solve.
    """
    if not 0 < r < 1:
        raise ValueError("r must be in (0, 1)")
    x = np.asarray(x, dtype=complex)
    if mode == "solve":
        T = op.matrix()
        M = np.eye(op.dim) - r * T
        y = _checked_solve(M, x)
        return (1 - r) * y
    if mode != "series":
        raise ValueError("mode must be 'series' or 'solve'")
    if norms is None:
        norms = _norm_table(op, _default_table_length(r))
    xn = float(np.max(op.space.norm(x)))
    if xn == 0:
        return np.zeros_like(x)
    try:
        N, _ = certified_truncation(norms, lambda n: (1 - r) * r ** n, lambda L: r, tol / xn)
    except CertificateError as exc:
        raise CertificateError(f"Abel mean at r = {r}: {exc}",
                               required_terms=int(np.ceil(np.log(tol) / np.log(r)))) from None
    return _series_apply(op, x, lambda n: (1 - r) * r ** n, N)


def _checked_solve(M, x):
    try:
        y = np.linalg.solve(M, x)
    except np.linalg.LinAlgError as exc:
        raise SingularSolveError(f"singular system: {exc}") from None
    scale = np.linalg.norm(M, 1) * np.linalg.norm(y) + np.linalg.norm(x)
    res = float(np.linalg.norm(M @ y - x) / scale) if scale > 0 else 0.0
    if not np.all(np.isfinite(y)) or res > SOLVE_RESIDUAL:
        raise SingularSolveError(f"solve residual {res:.3g} above {SOLVE_RESIDUAL:g}", residual=res)
    return y


def resolvent_apply(op, lam, x, mode="dense", tol=1e-12, norms=None):
    """``R(lam, T) x = (lam I - T)^(-1) x`` for ``|lam| > 1``."""
    lam = complex(lam)
    if not abs(lam) > 1:
        raise ValueError("need |lambda| > 1")
    x = np.asarray(x, dtype=complex)
    if mode == "dense":
        return _checked_solve(lam * np.eye(op.dim) - op.matrix(), x)
    if mode != "neumann":
        raise ValueError("mode must be 'dense' or 'neumann'")
    a = abs(lam)
    if norms is None:
        norms = _norm_table(op, _default_table_length(1 / a))
    xn = float(np.max(op.space.norm(x)))
    if xn == 0:
        return np.zeros_like(x)
    N, _ = certified_truncation(norms, lambda n: a ** (-n - 1.0), lambda L: 1 / a, tol / xn)
    return _series_apply(op, x, lambda n: lam ** (-n - 1), N)


def exp_coefficients(z, n, scaled=False):
    """``z^k / k!`` for ``k = 0..n`` through log-gamma; times ``e^(-|z|)`` if scaled."""
    k = np.arange(n + 1)
    az = abs(z)
    if az == 0:
        out = np.zeros(n + 1, dtype=complex)
        out[0] = 1.0
        return out
    logmag = k * np.log(az) - gammaln(k + 1) - (az if scaled else 0.0)
    phase = np.exp(1j * np.angle(z) * k)
    return np.exp(logmag) * phase


def exp_apply(op, z, x, tol=1e-12, scaled=False, norms=None):
    """``e^(zT) x`` by its Taylor series (``e^(-|z|) e^(zT) x`` when ``scaled``).

    The neglected tail is at most ``tol * e^|z| * ||x||`` (so ``tol * ||x||``
    in the scaled form).  ``|z| * max(1, ||T||)`` must stay below 700.
    """
    z = complex(z)
    az = abs(z)
    x = np.asarray(x, dtype=complex)
    if norms is None:
        norms = _norm_table(op, max(256, int(4 * az) + 64))
    norms = np.asarray(norms, dtype=float)
    if az * max(1.0, norms[1]) > EXP_BUDGET:
        raise OverflowBudgetError(f"|z| ||T|| = {az * max(1.0, norms[1]):.4g} exceeds {EXP_BUDGET}")
    xn = float(np.max(op.space.norm(x)))
    if xn == 0 or az == 0:
        return x.copy()

    def coef(n):
        return np.exp(n * np.log(az) - gammaln(n + 1.0) - az)

    N, _ = certified_truncation(norms, coef, lambda L: az / (L + 1.0), tol)
    c = exp_coefficients(z, N, scaled=True)
    out = _series_apply(op, x, lambda n: c[n], N)
    return out if scaled else out * np.exp(az)
