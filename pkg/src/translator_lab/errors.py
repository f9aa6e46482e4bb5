"""Exception types shared across the package."""


class TranslatorLabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TranslatorLabError, ValueError):
    """Argument outside the domain where a function or operation is defined."""


class SingularityError(DomainError):
    """Evaluation at a singular point of a kernel (e.g. coincident points)."""


class OverflowGuardError(DomainError, OverflowError):
    """Argument would overflow double precision."""


class ConfigurationError(TranslatorLabError, ValueError):
    """Inconsistent or invalid configuration parameters."""


class NumericError(TranslatorLabError, ArithmeticError):
    """Numerical breakdown: quadrature or linear solve failed."""


class FitError(NumericError):
    """Degenerate least-squares fit."""


class DivergenceError(NumericError):
    """Newton iteration did not converge.

    Carries the last iterate and the residual history so callers can inspect
    what went wrong.
    """

    def __init__(self, message, last_iterate=None, residual_history=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual_history = list(residual_history or [])
