"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input-side problems (bad parameters,
bad grids, unreadable files) exit with 2, numerical failures exit with 3.
"""


class DelfbmError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(DelfbmError, ValueError):
    """A model or estimator parameter is outside its domain."""


class GridError(DelfbmError, ValueError):
    """An observation grid is empty, unordered, or otherwise invalid."""


class SeriesFormatError(DelfbmError, ValueError):
    """A series file cannot be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class TransformRangeError(DelfbmError, OverflowError):
    """A Lamperti transform would overflow; carries the offending index."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ConditioningError(DelfbmError, ArithmeticError):
    """A covariance matrix stayed non-factorizable after the jitter ladder."""


class EstimationError(DelfbmError, RuntimeError):
    """A moment or regression step could not produce a usable value."""
