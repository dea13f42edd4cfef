"""Vector norms, operator norms and power-norm sequences.

Operator 2-norms in a weighted Hilbert space are Euclidean norms of the
rescaled matrix ``W^(1/2) M W^(-1/2)`` with ``W = diag(nu)``.  Two routes are
provided: a seeded power iteration (``operator_norm_2``) and a LAPACK SVD
(``exact_norm_2``); they are kept separate so one can check the other.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import ConvergenceError, OverflowBudgetError, SpaceError
from .operators import (EUCLIDEAN, Adjoint, DenseMatrix, Rotation, ShieldsPolynomial,
                        VolterraPerturbation, WeightedBackwardShift, apply,
                        is_shift_like)

OVERFLOW_LIMIT = 1e300
# entries of complex128 allowed for caching a stack of powers
POWER_CACHE_BUDGET = 2**24
# below this dimension polynomial norms use a dense SVD instead of Lanczos
DENSE_CUTOFF = 96


def vector_norm(x, space):
    return space.norm(x)


def shift_power_norm(space, n):
    """``||T^n||`` for the backward shift on ``l^p(nu)``: ``sup_j (nu_j/nu_{j+n})^(1/p)``.

    The supremum sits at ``j = 1`` for the built-in weight rules, giving
    ``(n+1)^(delta/p)`` and ``(log(n+2)/log 2)^(kappa/p)``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not getattr(space, "has_monotone_ratio", False):
        raise SpaceError("no closed form: weight ratio is not certified monotone")
    if space.weight == "poly":
        return float((n + 1.0) ** (space.exponent / space.p))
    if space.weight == "log":
        return float((np.log(n + 2.0) / np.log(2.0)) ** (space.exponent / space.p))
    return 1.0


def _scale(space, dim):
    if not space.is_hilbert:
        raise SpaceError("operator 2-norms need p = 2")
    return np.sqrt(space.weights(dim))


def weighted_matrix(m, space=None):
    """Euclidean matrix unitarily equivalent to ``m`` acting on ``l^2(nu)``."""
    if isinstance(m, DenseMatrix):
        space, m = m.space, m.entries
    m = np.asarray(m)
    s = _scale(EUCLIDEAN if space is None else space, m.shape[0])
    return (s[:, None] * m) / s[None, :]


def exact_norm_2(m, space=None):
    """Weighted operator 2-norm by a full SVD."""
    return float(np.linalg.norm(weighted_matrix(m, space), 2))


def operator_norm_2(m, tol=1e-12, max_iter=20000, seed=0, x0=None, space=None):
    """Weighted operator 2-norm by power iteration on ``A^H A``.

    Stops when the relative eigen-residual ``||A^H A v - s^2 v|| / s^2`` drops
    below ``tol``.  Raises ConvergenceError (with the last iterate) otherwise.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = weighted_matrix(m, space)
    D = A.shape[0]
    if x0 is None:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(D) + 1j * rng.standard_normal(D)
    else:
        v = np.array(x0, dtype=complex)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("start vector is zero")
    v /= nv
    res = np.inf
    for _ in range(max_iter):
        w = A.conj().T @ (A @ v)
        lam = float(np.real(np.vdot(v, w)))
        if lam <= 0:
            nw = np.linalg.norm(w)
            if nw == 0:
                return 0.0
            v = w / nw
            continue
        res = np.linalg.norm(w - lam * v) / lam
        if res <= tol:
            return float(np.sqrt(lam))
        v = w / np.linalg.norm(w)
    raise ConvergenceError(f"power iteration stalled at residual {res:.3g}",
                           iterate=v, residual=res, value=float(np.sqrt(max(lam, 0.0))))


def _shift_base(op):
    """Split a shift-like operator into (shift, rotation factor, adjoint?)."""
    g = 1.0 + 0j
    while isinstance(op, Rotation):
        g *= op.gamma
        op = op.inner
    adj = isinstance(op, Adjoint)
    if adj:
        op = op.inner
        h = 1.0 + 0j
        while isinstance(op, Rotation):
            h *= op.gamma
            op = op.inner
        g *= np.conj(h)
    return op, g, adj


def shift_polynomial_matvecs(coeffs, scale):
    """Matvecs of ``A = diag(s) (sum_k c_k S^k) diag(1/s)`` and ``A^H`` for the plain shift ``S``."""
    c = np.asarray(coeffs, dtype=complex)
    n = len(c) - 1
    D = len(scale)
    cr = c[::-1]
    cc = np.conj(c)

    def mv(y):
        u = np.convolve(y / scale, cr)[n:n + D]
        return scale * u

    def rmv(z):
        return np.convolve(z * scale, cc)[:D] / scale

    return mv, rmv


def _lanczos_norm(mv, rmv, D, v0, tol):
    op = LinearOperator((D, D), matvec=lambda y: rmv(mv(y)), dtype=complex)
    w, V = eigsh(op, k=1, which="LA", v0=v0, tol=tol)
    return float(np.sqrt(max(w[0], 0.0))), V[:, 0]


def _shift_poly_reduce(op, coeffs):
    base, g, adj = _shift_base(op)
    c = np.asarray(coeffs, dtype=complex) * g ** np.arange(len(coeffs))
    # ||p(S*)|| = ||conj(p)(S)|| in a Hilbert space
    if adj:
        c = np.conj(c)
    return base, c


def polynomial_norm(op, coeffs, v0=None, tol=1e-12, return_vector=False, seed=0):
    """``|| sum_k coeffs[k] T^k ||`` in the weighted 2-norm.

    Shift-like operators go through a matrix-free Lanczos solve on the
    rescaled normal equations (warm-startable through ``v0``); small or dense
    operators use an SVD.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if is_shift_like(op):
        base, c = _shift_poly_reduce(op, coeffs)
        D = base.dim
        s = _scale(base.space, D)
        c = c[:D]
        if D <= DENSE_CUTOFF or not np.any(c):
            M = sum(ck * np.eye(D, k=k) for k, ck in enumerate(c))
            val = exact_norm_2(np.asarray(M), base.space)
            return (val, None) if return_vector else val
        if v0 is None:
            v0 = np.random.default_rng(seed).standard_normal(D).astype(complex)
        mv, rmv = shift_polynomial_matvecs(c, s)
        val, vec = _lanczos_norm(mv, rmv, D, v0, tol)
        return (val, vec) if return_vector else val
    M = polynomial_matrix(op, coeffs)
    val = exact_norm_2(M, op.space)
    return (val, None) if return_vector else val


def polynomial_matrix(op, coeffs):
    """Dense ``sum_k coeffs[k] T^k`` by Horner's rule."""
    T = op.matrix()
    out = np.zeros_like(T)
    eye = np.eye(op.dim, dtype=complex)
    for ck in np.asarray(coeffs)[::-1]:
        out = out @ T + ck * eye
    return out


def orbit_norms(op, x, n_max):
    """``||T^n x||`` for ``n = 0..n_max`` by repeated application."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    out = np.empty(n_max + 1)
    v = np.asarray(x, dtype=complex)
    for n in range(n_max + 1):
        if n:
            v = apply(op, v)
        with np.errstate(over="ignore"):
            out[n] = op.space.norm(v)
        if not out[n] <= OVERFLOW_LIMIT:
            raise OverflowBudgetError(f"orbit norm exceeded {OVERFLOW_LIMIT:g} at n = {n}")
    return out


@dataclass(frozen=True, eq=False)
class PowerNormSequence:
    """``||T^n||`` for ``n = 0..n_max`` with a method tag per entry."""

    op_id: str
    values: np.ndarray
    methods: tuple

    @property
    def n_max(self):
        return len(self.values) - 1

    def submultiplicative(self, slack=1e-10):
        v = self.values
        N = self.n_max
        for m in range(N + 1):
            k = np.arange(0, N - m + 1)
            if np.any(v[m + k] > v[m] * v[k] * (1 + slack) + 1e-300):
                return False
        return True

    def is_certified(self):
        return all(m in ("closed_form", "singular_value") for m in self.methods)

    def to_csv(self, fh):
        w = csv.writer(fh)
        w.writerow(["n", "norm", "method"])
        for n, (val, meth) in enumerate(zip(self.values, self.methods)):
            w.writerow([n, repr(float(val)), meth])


def _op_id(op):
    return type(op).__name__


def power_norms(op, n_max, budget=POWER_CACHE_BUDGET):
    """Power norms of a truncated operator.

    Weighted shifts (also rotated or adjoint) use the closed form, which is
    exact for the truncation while ``n < dim`` and 0 beyond.  Dense and
    Volterra operators use singular values of the computed powers.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    n = np.arange(n_max + 1)
    if is_shift_like(op):
        base, _, adj = _shift_base(op)
        if adj and not base.space.is_hilbert:
            raise SpaceError("adjoint needs p = 2")
        vals = np.array([shift_power_norm(base.space, k) if k < base.dim else 0.0 for k in n])
        return PowerNormSequence(_op_id(op), vals, ("closed_form",) * (n_max + 1))
    if isinstance(op, ShieldsPolynomial):
        # norm of multiplication by z^n on the full polynomial space
        vals = np.where(n < op.dim, n + 1.0, 0.0)
        return PowerNormSequence(_op_id(op), vals, ("closed_form",) * (n_max + 1))
    if not isinstance(op, (DenseMatrix, VolterraPerturbation, Rotation, Adjoint)):
        raise TypeError(f"unsupported operator {type(op).__name__}")
    if not op.space.is_hilbert:
        raise SpaceError("dense power norms are only computed for p = 2")
    s = _scale(op.space, op.dim)
    A = (s[:, None] * op.matrix()) / s[None, :]
    D = op.dim
    vals = np.empty(n_max + 1)
    P = np.eye(D, dtype=complex)
    chunk = max(1, budget // (D * D))
    stack = []
    start = 0
    for k in range(n_max + 1):
        if k:
            P = A @ P
        stack.append(P)
        if len(stack) == chunk or k == n_max:
            vals[start:k + 1] = np.linalg.norm(np.array(stack), 2, axis=(1, 2))
            start = k + 1
            stack = []
            if not np.all(vals[:k + 1] <= OVERFLOW_LIMIT):
                raise OverflowBudgetError(f"power norm exceeded {OVERFLOW_LIMIT:g}")
    return PowerNormSequence(_op_id(op), vals, ("singular_value",) * (n_max + 1))


def tail_envelope(values):
    """Constants ``(K, rho, m)`` with ``values[n] <= K rho^n`` for every ``n``.

    ``rho = values[m]^(1/m)`` at the minimizing ``m`` is an upper estimate of
    the spectral radius; ``rho = 0`` means ``T^m = 0``.  Valid whenever the
    values are true norms (submultiplicativity is what makes it hold past the
    end of the table).
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        raise ValueError("need at least ||T^0|| and ||T^1||")
    k = np.arange(1, len(v))
    with np.errstate(divide="ignore"):
        roots = v[1:] ** (1.0 / k)
    m = int(k[np.argmin(roots)])
    rho = float(roots[m - 1])
    if rho == 0.0:
        return float(np.max(v[:m])), 0.0, m
    K = float(np.max(v[:m] / rho ** np.arange(m)))
    return K, rho, m


def spectral_radius_estimate(values):
    return tail_envelope(values)[1]
