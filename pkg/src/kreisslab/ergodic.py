"""Fixed-space / range splitting and convergence diagnostics for means."""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CertificateError
from .operators import apply, is_shift_like
from .transforms import MeanSpec, abel_mean_apply, cesaro_mean_apply, power_sum


@dataclass(frozen=True, eq=False)
class ErgodicDecomposition:
    """``C^D = F(T) (+) range(I - T)`` for a finite matrix.

    fixed_basis has orthonormal columns spanning ``ker(I - T)``; range_basis
    orthonormal columns spanning ``range(I - T)``.  ``projection_E`` is the
    projection onto F along the range, present only when ``is_direct_sum``.
    """

    fixed_basis: np.ndarray
    range_basis: np.ndarray
    is_direct_sum: bool
    projection_E: object
    indeterminate: bool
    singular_values: np.ndarray
    tol: float

    @property
    def dim_fixed(self):
        return self.fixed_basis.shape[1]

    @property
    def rank(self):
        return self.range_basis.shape[1]


def decompose(m, tol=1e-10):
    """Split by singular values of ``I - T`` thresholded at ``tol``.

    Finite dimension makes ``dim F + rank = D`` automatic, so the direct-sum
    test is whether ``[F R]`` has full rank (the intersection is trivial).
    The result is flagged indeterminate when a singular value lies within a
    factor 10 of ``tol``.
    """
    T = m.matrix() if hasattr(m, "matrix") else np.asarray(m, dtype=complex)
    D = T.shape[0]
    U, s, Vh = np.linalg.svd(np.eye(D) - T)
    r = int(np.sum(s > tol))
    indeterminate = bool(np.any((s > tol / 10) & (s < tol * 10)))
    F = Vh[r:].conj().T
    R = U[:, :r]
    B = np.hstack([F, R])
    sb = np.linalg.svd(B, compute_uv=False)
    direct = bool(sb[-1] > tol) if B.shape[1] == D else False
    E = None
    if direct:
        P = np.diag(np.r_[np.ones(F.shape[1]), np.zeros(r)])
        E = B @ P @ np.linalg.inv(B)
    return ErgodicDecomposition(F, R, direct, E, indeterminate, s, tol)


@dataclass(frozen=True, eq=False)
class Diagnostics:
    """Values of a convergence diagnostic along a ladder, with the verdict."""

    rungs: np.ndarray
    values: np.ndarray
    reference: str
    converged: bool
    tol: float
    limit: object = None
    note: str = ""

    def to_rows(self):
        return [(float(r), float(v)) for r, v in zip(self.rungs, self.values)]


def _verdict(values, tol):
    # Cauchy test on the ladder: small at the end, or a clear decay trend
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return False
    if v[-1] <= tol:
        return True
    if len(v) >= 4 and np.all(np.diff(v[-4:]) < 0) and v[-1] <= v[-4] / 4:
        return True
    return False


def _projection_for(op):
    if is_shift_like(op):
        # nilpotent truncation: F(T) = {0}
        return np.zeros((op.dim, op.dim))
    if op.space.is_hilbert:
        dec = decompose(op)
        if dec.is_direct_sum and not dec.indeterminate:
            return dec.projection_E
    return None


def mean_convergence_diagnostics(op, alpha, x, n_ladder=None, tol=1e-8, E="auto"):
    """``||M_n^(alpha) x - E x||`` along a dyadic ladder of ``n``.

    Without a projection the diagnostic is ``||M_n x - M_2n x||``.  Order-1
    means of matrices use binary doubling, so ladders may reach ``2^30``;
    other cases run a single orbit pass per rung.
    """
    x = np.asarray(x, dtype=complex)
    if n_ladder is None:
        n_ladder = 2 ** np.arange(1, 31 if alpha == 1 else 15)
    n_ladder = np.asarray(n_ladder, dtype=int)
    if E == "auto":
        E = _projection_for(op)
    dense = not is_shift_like(op) and alpha == 1 and op.dim <= 256

    def mean(n):
        if dense:
            return power_sum(op.matrix(), n + 1) @ x / (n + 1)
        return cesaro_mean_apply(op, MeanSpec(alpha, int(n)), x)

    if E is not None:
        Ex = E @ x
        vals = np.array([op.space.norm(mean(n) - Ex) for n in n_ladder])
        return Diagnostics(n_ladder, vals, "projection", _verdict(vals, tol), tol, Ex)
    means = {int(n): mean(n) for n in np.unique(np.r_[n_ladder, 2 * n_ladder])}
    vals = np.array([op.space.norm(means[int(n)] - means[int(2 * n)]) for n in n_ladder])
    return Diagnostics(n_ladder, vals, "cauchy", _verdict(vals, tol), tol,
                       means[int(2 * n_ladder[-1])])


def default_abel_ladder(j_max=30):
    return 1.0 - 2.0 ** -np.arange(1, j_max + 1)


def abel_convergence_diagnostics(op, x, r_ladder=None, tol=1e-8, E="auto", mode="auto"):
    """``||A_r x - E x||`` (or ``||A_r x - A_r' x||`` between rungs) for ``r -> 1``.

    Matrices use a dense solve.  Otherwise the certified series is used and
    the ladder is cut, with a warning, at the first rung it cannot certify.
    """
    x = np.asarray(x, dtype=complex)
    r_ladder = default_abel_ladder() if r_ladder is None else np.asarray(r_ladder, dtype=float)
    if mode == "auto":
        mode = "series" if is_shift_like(op) or op.dim > 256 else "solve"
    if E == "auto":
        E = _projection_for(op)
    pts, note = [], ""
    for r in r_ladder:
        try:
            pts.append(abel_mean_apply(op, r, x, tol=tol * 1e-2, mode=mode))
        except CertificateError as exc:
            note = f"ladder cut at r = {r}: {exc}"
            warnings.warn(note, RuntimeWarning, stacklevel=2)
            break
    rungs = r_ladder[:len(pts)]
    if E is not None:
        Ex = E @ x
        vals = np.array([op.space.norm(a - Ex) for a in pts])
        return Diagnostics(rungs, vals, "projection", _verdict(vals, tol), tol, Ex, note)
    vals = np.array([op.space.norm(pts[i] - pts[i + 1]) for i in range(len(pts) - 1)])
    return Diagnostics(rungs[:-1], vals, "cauchy", _verdict(vals, tol), tol,
                       pts[-1] if pts else None, note)


def range_mean_norms(op, y, n_ladder):
    """``||M_n(T)(I - T) y||`` with ``M_n = (1/n) sum_{k<n} T^k``."""
    y = np.asarray(y, dtype=complex)
    w = y - apply(op, y)
    return np.array([op.space.norm(cesaro_mean_apply(op, MeanSpec(1, int(n), "ergodic_average"), w))
                     for n in n_ladder])
