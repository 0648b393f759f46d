"""Exception and warning classes used across the package."""


class SparError(Exception):
    """Base class for package errors."""


class DomainError(SparError, ValueError):
    """A mean or response value lies outside the family's domain."""


class NumericalError(SparError, ArithmeticError):
    """A computation produced a non-finite intermediate value."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateResponseError(SparError, ValueError):
    """The response carries no signal (zero null deviance)."""


class DegenerateSignalError(SparError, ValueError):
    """A screening coefficient is identically zero."""


class CalibrationError(SparError, RuntimeError):
    """Intercept calibration failed to bracket the target mean."""


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped before meeting its tolerance."""


class SaturationWarning(UserWarning):
    """Every lambda on a path exceeds the deviance-ratio threshold."""


class UndefinedMetricWarning(UserWarning):
    """A metric has a zero denominator or a single class."""
