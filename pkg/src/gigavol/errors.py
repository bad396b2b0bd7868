"""Exception hierarchy shared by all modules."""


class GigavolError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GigavolError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateDataError(GigavolError, ValueError):
    """Data carry no information for the estimator (e.g. zero spread)."""


class DataError(GigavolError, ValueError):
    """Input file or series is malformed."""


class NumericalError(GigavolError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class NoRootError(NumericalError):
    """No sign change was found in the searched interval."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge.

    Attributes
    ----------
    achieved : float
        Absolute error estimate at termination.
    """

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(message)
        self.achieved = achieved


class HorizonExceededError(NumericalError):
    """A simulation ran to its horizon without meeting its stopping rule."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
