"""Numerical laboratory for resolvent conditions, Cesaro means and power growth."""

from .cesaro import CesaroCoefficientTable, coeff
from .constants import ConstantEstimate
from .errors import (CertificateError, ConvergenceError, DimensionError, OverflowBudgetError,
                     SingularSolveError, SpaceError)
from .norms import PowerNormSequence, power_norms
from .operators import GALLERY, WeightedSpace, dense, from_dict, gallery
from .transforms import MeanSpec

__version__ = "0.1.0"

__all__ = ["CesaroCoefficientTable", "coeff", "ConstantEstimate", "CertificateError",
           "ConvergenceError", "DimensionError", "OverflowBudgetError", "SingularSolveError",
           "SpaceError", "PowerNormSequence", "power_norms", "GALLERY", "WeightedSpace",
           "dense", "from_dict", "gallery", "MeanSpec"]
