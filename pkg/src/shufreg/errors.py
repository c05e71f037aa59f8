"""Exception types raised by estimators and the optimizer."""


class EstimationError(Exception):
    """Base class for numerical estimation failures."""


class SingularSystemError(EstimationError):
    """Feature matrix is rank deficient; the linear system cannot be solved."""


class DegenerateMeanError(EstimationError):
    """A sample mean that must be divided by is too close to zero."""


class NoRealSolutionError(EstimationError):
    """The moment-matching quadratic has no real roots."""


class NumericalError(EstimationError):
    """A loss or gradient evaluated to a non-finite value."""


class OptimizationFailedError(EstimationError):
    """Every start of the multi-start descent diverged."""

    def __init__(self, message, traces=None):
        super().__init__(message)
        self.traces = traces if traces is not None else []


class CsvFormatError(ValueError):
    """Malformed dataset CSV; the message names the offending row and column."""
