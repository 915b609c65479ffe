"""Exception hierarchy for trapdyn."""


class TrapdynError(Exception):
    """Base class for all errors raised by this package."""


class LosslessError(TrapdynError, ValueError):
    """The quadratic tensor violates the lossless identity."""


class DimensionError(TrapdynError, ValueError):
    pass


class NotNegativeDefiniteError(TrapdynError, ValueError):
    """A_s(m) has a non-negative eigenvalue where a negative-definite one is required."""


class SolverError(TrapdynError, RuntimeError):
    """The conic solver failed, or its output did not survive re-verification."""

    def __init__(self, message, status=None, info=None):
        super().__init__(message)
        self.status = status
        self.info = info or {}


class InconsistencyError(TrapdynError, RuntimeError):
    pass


class DegenerateEllipsoidError(TrapdynError, ValueError):
    pass


class DivergenceError(TrapdynError, RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class SystemFormatError(TrapdynError, ValueError):
    """Malformed system file."""
