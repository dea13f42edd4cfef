"""Cesaro binomial coefficients ``A_n^alpha``.

``A_0^alpha = 1`` and ``A_n^alpha = (alpha+1)(alpha+2)...(alpha+n)/n!``.  They are
the Taylor coefficients of ``(1-z)^(-alpha-1)`` and satisfy the convolution
identity ``A_n^alpha = sum_{k<=n} A_{n-k}^{alpha-1}``.
"""

from dataclasses import dataclass

import numpy as np


def _check_alpha(alpha):
    if not np.isfinite(alpha) or alpha <= -1:
        raise ValueError(f"alpha must be > -1, got {alpha}")


def raw_coefficients(alpha, n_max):
    """``A_0^alpha .. A_{n_max}^alpha`` by the multiplicative recurrence.

    No range check on ``alpha``; used internally for orders ``alpha - 1``
    that may equal -1 (then only ``A_0`` is nonzero).
    """
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if n_max:
        k = np.arange(1, n_max + 1, dtype=float)
        out[1:] = np.cumprod((alpha + k) / k)
    return out


def coeff(alpha, n):
    """Return ``A_n^alpha`` in double precision (no factorials, no overflow).

    >>> coeff(1, 7)
    8.0
    """
    _check_alpha(alpha)
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(raw_coefficients(alpha, n)[-1])


@dataclass(frozen=True, eq=False)
class CesaroCoefficientTable:
    """``A_n^alpha`` for ``n = 0..n_max`` at a fixed order."""

    alpha: float
    values: np.ndarray

    @classmethod
    def build(cls, alpha, n_max):
        _check_alpha(alpha)
        vals = raw_coefficients(alpha, n_max)
        vals.setflags(write=False)
        return cls(float(alpha), vals)

    @property
    def n_max(self):
        return len(self.values) - 1

    def __getitem__(self, n):
        return self.values[n]

    def __len__(self):
        return len(self.values)


def convolution_residuals(alpha, n_max):
    """Relative residuals ``|A_n^a - sum_k A_{n-k}^{a-1}| / A_n^a`` for ``n <= n_max``."""
    upper = raw_coefficients(alpha, n_max)
    lower = raw_coefficients(alpha - 1.0, n_max)
    sums = np.cumsum(lower)
    return np.abs(upper - sums) / upper


def verify_convolution(alpha, n_max, tol):
    """Check the convolution identity up to ``n_max``.

    Returns ``(ok, max_residual)``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    res = float(np.max(convolution_residuals(alpha, n_max)))
    return res <= tol, res


def growth_ratio_spread(alpha, n_lo, n_hi):
    """Relative spread of ``A_n^alpha / n^alpha`` over ``[n_lo, n_hi]``.

    ``A_n^alpha ~ n^alpha / Gamma(alpha+1)``, so the spread shrinks like ``1/n_lo``.
    """
    vals = raw_coefficients(alpha, n_hi)[n_lo:]
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    ratio = vals / n**alpha
    return float((ratio.max() - ratio.min()) / ratio.max())
