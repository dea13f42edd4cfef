"""Operator descriptions, matrix-free application and the example gallery.

Every operator carries an explicit truncation dimension ``dim`` and the space
whose norm it is measured in.  Vectors are 0-indexed arrays; coordinate ``j``
of the sequence space (``j >= 1``) lives at array index ``j - 1``.

Vector arguments may also be 2-D arrays of shape ``(dim, k)``; columns are
then treated as independent vectors.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SpaceError

__all__ = [
    "WeightedSpace", "ShieldsNorm", "WeightedBackwardShift", "DenseMatrix",
    "Rotation", "VolterraPerturbation", "ShieldsPolynomial", "Adjoint",
    "apply", "adjoint_apply", "truncate", "gallery", "GALLERY", "from_dict",
    "load_spec", "dense", "identity",
]


@dataclass(frozen=True)
class WeightedSpace:
    """``l^p(nu)`` over ``j = 1, 2, ...`` with ``||x|| = (sum |x_j|^p nu_j)^(1/p)``.

    weight is one of ``"poly"`` (``nu_j = j^-exponent``, exponent in (0, 1)),
    ``"log"`` (``nu_j = log(j+1)^-exponent``, exponent > 0) or ``"const"``.
    """

    p: float = 2.0
    weight: str = "const"
    exponent: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p >= 1):
            raise ValueError(f"p must be in [1, inf), got {self.p}")
        if self.weight == "poly":
            if not 0 < self.exponent < 1:
                raise ValueError(f"polynomial weight needs delta in (0, 1), got {self.exponent}")
        elif self.weight == "log":
            if not (np.isfinite(self.exponent) and self.exponent > 0):
                raise ValueError(f"log weight needs kappa > 0, got {self.exponent}")
        elif self.weight == "const":
            object.__setattr__(self, "exponent", 0.0)
        else:
            raise ValueError(f"unknown weight rule {self.weight!r}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "exponent", float(self.exponent))

    @property
    def is_hilbert(self):
        return self.p == 2.0

    @property
    def has_monotone_ratio(self):
        """True when ``nu_j / nu_{j+n}`` is maximal at ``j = 1`` for every ``n``.

        Holds for all three built-in rules: ``((j+n)/j)^delta`` and
        ``(log(j+n+1)/log(j+1))^kappa`` both decrease in ``j``.
        """
        return self.weight in ("poly", "log", "const")

    def weights(self, dim):
        j = np.arange(1, dim + 1, dtype=float)
        if self.weight == "poly":
            return j ** -self.exponent
        if self.weight == "log":
            return np.log1p(j) ** -self.exponent
        return np.ones(dim)

    def norm(self, x):
        x = np.asarray(x)
        nu = self.weights(x.shape[0])
        if x.ndim == 2:
            nu = nu[:, None]
        if self.p == 2.0:
            return np.sqrt(np.sum(np.abs(x) ** 2 * nu, axis=0))
        return np.sum(np.abs(x) ** self.p * nu, axis=0) ** (1.0 / self.p)

    def to_dict(self):
        d = {"p": self.p, "weight": {"type": self.weight}}
        if self.weight == "poly":
            d["weight"]["delta"] = self.exponent
        elif self.weight == "log":
            d["weight"]["kappa"] = self.exponent
        return d

    @classmethod
    def from_dict(cls, d):
        w = d.get("weight", {"type": "const"})
        kind = w.get("type", "const")
        exponent = {"poly": w.get("delta"), "log": w.get("kappa")}.get(kind, 0.0)
        if exponent is None:
            raise ValueError(f"weight {kind!r} needs its exponent")
        return cls(p=d.get("p", 2.0), weight=kind, exponent=exponent)


EUCLIDEAN = WeightedSpace()


@dataclass(frozen=True)
class ShieldsNorm:
    """``||f||_inf + ||f'||_1`` on the unit circle for ``f = sum c_k z^k``.

    Both terms are evaluated on ``grid`` equispaced points (FFT); the L1 term
    uses the normalized arc-length measure.  Coefficient vectors must satisfy
    ``len(c) <= grid``.
    """

    grid: int = 4096

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid must be >= 2")

    is_hilbert = False
    has_monotone_ratio = False

    def norm(self, c):
        c = np.asarray(c)
        D = c.shape[0]
        if D > self.grid:
            raise DimensionError(f"degree cap {D} exceeds circle grid {self.grid}")
        k = np.arange(D, dtype=float)
        if c.ndim == 2:
            k = k[:, None]
        f = np.fft.ifft(c, n=self.grid, axis=0) * self.grid
        df = np.fft.ifft(k * c, n=self.grid, axis=0) * self.grid
        return np.max(np.abs(f), axis=0) + np.mean(np.abs(df), axis=0)

    def to_dict(self):
        return {"grid": self.grid}


def _as_vector(op, x):
    x = np.asarray(x)
    if x.ndim not in (1, 2) or x.shape[0] != op.dim:
        raise DimensionError(f"expected leading dimension {op.dim}, got shape {x.shape}")
    return x


def _readonly(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


class _Operator:
    """Shared helpers; subclasses are frozen dataclasses."""

    def apply(self, x):
        return apply(self, x)

    def adjoint_apply(self, x):
        return adjoint_apply(self, x)

    def norm(self, x):
        return self.space.norm(x)

    def to_json(self):
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class WeightedBackwardShift(_Operator):
    """``(Tx)_k = x_{k+1}`` on ``l^p(nu)``, truncated to ``dim`` coordinates."""

    space: WeightedSpace
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def matrix(self):
        return np.eye(self.dim, k=1, dtype=complex)

    def to_dict(self):
        return {"kind": "weighted_shift", **self.space.to_dict(), "truncation": self.dim}


@dataclass(frozen=True, eq=False)
class DenseMatrix(_Operator):
    entries: np.ndarray
    space: object = EUCLIDEAN

    def __post_init__(self):
        a = _readonly(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionError(f"dense operator needs a square matrix, got shape {a.shape}")
        object.__setattr__(self, "entries", a)

    @property
    def dim(self):
        return self.entries.shape[0]

    def matrix(self):
        return np.array(self.entries)

    def to_dict(self):
        d = {"kind": "dense",
             "entries": {"real": self.entries.real.tolist(), "imag": self.entries.imag.tolist()}}
        if isinstance(self.space, ShieldsNorm):
            d["shields_grid"] = self.space.grid
        else:
            d.update(self.space.to_dict())
        return d


@dataclass(frozen=True, eq=False)
class Rotation(_Operator):
    """``gamma * T`` for unimodular ``gamma``."""

    inner: object
    gamma: complex

    def __post_init__(self):
        g = complex(self.gamma)
        if abs(abs(g) - 1.0) > 1e-12:
            raise ValueError(f"gamma must be unimodular, |gamma| = {abs(g)}")
        object.__setattr__(self, "gamma", g)

    @property
    def dim(self):
        return self.inner.dim

    @property
    def space(self):
        return self.inner.space

    def matrix(self):
        return self.gamma * self.inner.matrix()

    def to_dict(self):
        return {"kind": "rotation", "gamma": [self.gamma.real, self.gamma.imag],
                "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class VolterraPerturbation(_Operator):
    """``I - r V`` with ``(Vf)(t) = int_0^t f`` discretized by the trapezoid rule.

    Grid ``t_i = i/(dim-1)``; Euclidean coordinates on the grid values.
    """

    r: float
    dim: int

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        if self.dim < 2:
            raise ValueError("Volterra discretization needs dim >= 2")

    space = EUCLIDEAN

    @property
    def step(self):
        return 1.0 / (self.dim - 1)

    def volterra_matrix(self):
        D, h = self.dim, self.step
        V = np.tril(np.full((D, D), h), k=-1)
        V[1:, 0] = h / 2
        idx = np.arange(1, D)
        V[idx, idx] = h / 2
        return V

    def matrix(self):
        return np.eye(self.dim, dtype=complex) - self.r * self.volterra_matrix()

    def to_dict(self):
        return {"kind": "volterra", "r": self.r, "truncation": self.dim}


@dataclass(frozen=True)
class ShieldsPolynomial(_Operator):
    """Multiplication by ``z`` on polynomials of degree ``< dim`` (coefficient basis)."""

    dim: int
    grid: int = 4096

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.dim > self.grid:
            raise ValueError("degree cap must not exceed the circle grid")

    @property
    def space(self):
        return ShieldsNorm(self.grid)

    def matrix(self):
        return np.eye(self.dim, k=-1, dtype=complex)

    def to_dict(self):
        return {"kind": "shields", "truncation": self.dim, "grid": self.grid}


@dataclass(frozen=True, eq=False)
class Adjoint(_Operator):
    """Hilbert-space adjoint of ``inner`` with respect to its weighted inner product."""

    inner: object

    def __post_init__(self):
        if not self.inner.space.is_hilbert:
            raise SpaceError("adjoint needs an inner-product space (p = 2)")

    @property
    def dim(self):
        return self.inner.dim

    @property
    def space(self):
        return self.inner.space

    def matrix(self):
        nu = self.space.weights(self.dim)
        return (self.inner.matrix().conj().T * nu[None, :]) / nu[:, None]

    def to_dict(self):
        return {"kind": "adjoint", "inner": self.inner.to_dict()}


def _shift_up(x):
    # (Tx)_k = x_{k+1}
    y = np.zeros_like(x)
    y[:-1] = x[1:]
    return y


def _shift_down(x):
    y = np.zeros_like(x)
    y[1:] = x[:-1]
    return y


def _nu_col(nu, x):
    return nu[:, None] if x.ndim == 2 else nu


def apply(op, x):
    """Return ``T x``."""
    x = _as_vector(op, x)
    if isinstance(op, WeightedBackwardShift):
        return _shift_up(x)
    if isinstance(op, ShieldsPolynomial):
        return _shift_down(x)
    if isinstance(op, Rotation):
        return op.gamma * apply(op.inner, x)
    if isinstance(op, Adjoint):
        return adjoint_apply(op.inner, x)
    if isinstance(op, VolterraPerturbation):
        h = op.step
        c = np.cumsum(x, axis=0)
        vx = h * (c - 0.5 * (x[0] + x))
        vx[0] = 0
        return x - op.r * vx
    if isinstance(op, DenseMatrix):
        return op.entries @ x
    raise TypeError(f"unsupported operator {type(op).__name__}")


def adjoint_apply(op, x):
    """Return ``T* x`` for the inner product ``<x, y> = sum x_j conj(y_j) nu_j``."""
    x = _as_vector(op, x)
    if not op.space.is_hilbert:
        raise SpaceError("adjoint needs an inner-product space (p = 2)")
    if isinstance(op, WeightedBackwardShift):
        nu = op.space.weights(op.dim)
        y = np.zeros_like(x, dtype=np.result_type(x, float))
        y[1:] = _nu_col(nu[:-1] / nu[1:], x) * x[:-1]
        return y
    if isinstance(op, Rotation):
        return np.conj(op.gamma) * adjoint_apply(op.inner, x)
    if isinstance(op, Adjoint):
        return apply(op.inner, x)
    if isinstance(op, VolterraPerturbation):
        return op.matrix().conj().T @ x
    if isinstance(op, DenseMatrix):
        nu = op.space.weights(op.dim)
        return (op.entries.conj().T @ (_nu_col(nu, x) * x)) / _nu_col(nu, x)
    raise TypeError(f"unsupported operator {type(op).__name__}")


def truncate(op, dim):
    """Top-left ``dim x dim`` compression as a DenseMatrix carrying the space.

    For weighted shifts the compression at ``dim >= n + 1`` has the same
    ``||T^n||`` as the infinite shift: the supremum is attained at ``j = n + 1``.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return DenseMatrix(_compressed_matrix(op, dim), op.space)


def _compressed_matrix(op, dim):
    if isinstance(op, WeightedBackwardShift):
        return WeightedBackwardShift(op.space, dim).matrix()
    if isinstance(op, ShieldsPolynomial):
        return ShieldsPolynomial(dim, op.grid).matrix()
    if isinstance(op, VolterraPerturbation):
        return VolterraPerturbation(op.r, dim).matrix()
    if isinstance(op, Rotation):
        return op.gamma * _compressed_matrix(op.inner, dim)
    if isinstance(op, Adjoint):
        nu = op.space.weights(dim)
        return (_compressed_matrix(op.inner, dim).conj().T * nu[None, :]) / nu[:, None]
    if isinstance(op, DenseMatrix):
        if dim > op.dim:
            raise DimensionError(f"cannot enlarge a {op.dim}x{op.dim} matrix to {dim}")
        return op.matrix()[:dim, :dim]
    raise TypeError(f"unsupported operator {type(op).__name__}")


def dense(entries, space=None):
    return DenseMatrix(entries, EUCLIDEAN if space is None else space)


def identity(dim, space=None):
    return dense(np.eye(dim), space)


def is_shift_like(op):
    """True if ``op`` is ``c * S`` or ``c * S*`` for a weighted backward shift ``S``."""
    while isinstance(op, Rotation):
        op = op.inner
    if isinstance(op, Adjoint):
        op = op.inner
        while isinstance(op, Rotation):
            op = op.inner
    return isinstance(op, WeightedBackwardShift)


def _delta_shift(delta=0.8, p=2, dim=512):
    return WeightedBackwardShift(WeightedSpace(p, "poly", delta), int(dim))


def _log_shift(kappa=2.0, p=2, dim=512):
    return WeightedBackwardShift(WeightedSpace(p, "log", kappa), int(dim))


def _assani():
    return dense([[-1.0, 2.0], [0.0, -1.0]])


def _jordan_unimodular(angle=0.0):
    # angle is a fraction of a full turn
    g = np.exp(2j * np.pi * angle)
    return dense([[g, 1.0], [0.0, g]])


def _diagonal_unitary(phases=(0.0, 0.25, 0.5, 0.75)):
    return dense(np.diag(np.exp(2j * np.pi * np.asarray(phases, dtype=float))))


def _volterra_perturb(r=1.0, dim=64):
    return VolterraPerturbation(float(r), int(dim))


def _shields(dim=256, grid=4096):
    return ShieldsPolynomial(int(dim), int(grid))


GALLERY = {
    "delta_shift": (_delta_shift, "backward shift on l^p(nu), nu_j = j^-delta; ||T^n|| = (n+1)^(delta/p)"),
    "log_shift": (_log_shift, "backward shift on l^p(nu), nu_j = log(j+1)^-kappa"),
    "assani": (_assani, "[[-1, 2], [0, -1]]: Cesaro bounded, powers grow linearly"),
    "jordan_unimodular": (_jordan_unimodular, "[[g, 1], [0, g]] with g = exp(2 pi i angle)"),
    "diagonal_unitary": (_diagonal_unitary, "diag(exp(2 pi i phase_k)), default diag(1, i, -1, -i)"),
    "volterra_perturb": (_volterra_perturb, "I - rV, V the trapezoid Volterra integral on [0, 1]"),
    "shields": (_shields, "multiplication by z with norm ||f||_inf + ||f'||_1"),
}


def gallery(name, **params):
    """Build a gallery operator by name with keyword parameters."""
    try:
        factory = GALLERY[name][0]
    except KeyError:
        raise KeyError(f"unknown gallery entry {name!r}; known: {sorted(GALLERY)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None


def _complex_matrix(d):
    if isinstance(d, dict):
        return np.asarray(d["real"], dtype=float) + 1j * np.asarray(d.get("imag", 0.0), dtype=float)
    return np.asarray(d, dtype=complex)


def from_dict(d):
    """Inverse of ``op.to_dict()``; also accepts ``{"gallery": name, "params": {...}}``."""
    if "gallery" in d:
        return gallery(d["gallery"], **d.get("params", {}))
    kind = d.get("kind")
    if kind == "weighted_shift":
        return WeightedBackwardShift(WeightedSpace.from_dict(d), int(d["truncation"]))
    if kind == "dense":
        space = ShieldsNorm(d["shields_grid"]) if "shields_grid" in d else WeightedSpace.from_dict(d)
        return DenseMatrix(_complex_matrix(d["entries"]), space)
    if kind == "rotation":
        g = d["gamma"]
        g = complex(g[0], g[1]) if isinstance(g, (list, tuple)) else complex(g)
        return Rotation(from_dict(d["inner"]), g)
    if kind == "volterra":
        return VolterraPerturbation(float(d["r"]), int(d["truncation"]))
    if kind == "shields":
        return ShieldsPolynomial(int(d["truncation"]), int(d.get("grid", 4096)))
    if kind == "adjoint":
        return Adjoint(from_dict(d["inner"]))
    raise ValueError(f"unknown operator kind {kind!r}")


def load_spec(path):
    with open(path) as fh:
        return from_dict(json.load(fh))
