"""Exception hierarchy shared by the package."""


class EpdError(Exception):
    """Base class for all errors raised by adaptive_epd."""


class DomainError(EpdError, ValueError):
    """Argument outside the domain of a numeric function."""


class DegenerateSampleError(EpdError, ValueError):
    """Sample has zero spread around the location, so the scale MLE is 0."""


class NoSolutionError(EpdError, ValueError):
    """A root-finding problem has no solution inside the requested range."""


class InsufficientDataError(EpdError, ValueError):
    """Not enough observations for the requested operation."""


class UndefinedRateError(EpdError, ValueError):
    """Rate estimate is undefined (zero-variance denominator)."""


class DivergenceError(EpdError, RuntimeError):
    """Adaptive scale collapsed to zero, so the log-likelihood is unbounded."""


class DataError(EpdError, ValueError):
    """Input file is missing, malformed or holds invalid values."""
