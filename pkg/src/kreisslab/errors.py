"""Exception types raised by kreisslab."""


class DimensionError(ValueError):
    """Raised when a vector does not match the truncation dimension of an operator."""


class SpaceError(ValueError):
    """Raised when an operation needs structure the ambient space does not have
    (e.g. an adjoint outside of a Hilbert space)."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative method did not converge.

    The last iterate and the residual at exit are kept on the exception so
    callers can still use the (uncertified) approximation.
    """

    def __init__(self, msg, iterate=None, residual=None, value=None):
        super().__init__(msg)
        self.iterate = iterate
        self.residual = residual
        self.value = value


class CertificateError(RuntimeError):
    """Raised when a truncated series cannot be certified with the available norm data."""

    def __init__(self, msg, required_terms=None):
        super().__init__(msg)
        self.required_terms = required_terms


class OverflowBudgetError(OverflowError):
    """Raised when a computation would exceed the floating point overflow budget."""


class SingularSolveError(RuntimeError):
    """Raised when a linear solve is too ill-conditioned to be trusted."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual
