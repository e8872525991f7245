"""Exception hierarchy shared by every module.

The CLI maps :class:`UsageError` subclasses to exit code 2 and every other
:class:`ExIndexError` to exit code 1, printing the class name.
"""


class ExIndexError(Exception):
    """Base class for all package errors."""


class UsageError(ExIndexError):
    """Bad parameters or configuration (exit code 2)."""


class InvalidParameter(UsageError, ValueError):
    pass


class ConfigError(UsageError):
    pass


class NumericError(ExIndexError):
    """An estimator or oracle could not produce a value (exit code 1)."""


class NoExceedances(NumericError):
    pass


class TooFewExceedances(NumericError):
    pass


class DegenerateCounts(NumericError):
    pass


class AllWindowsExceed(NumericError):
    pass


class DegenerateIntervals(NumericError):
    pass


class NonPositiveOrderStatistic(NumericError):
    pass


class NonIdentifiable(NumericError):
    pass


class NoQualifyingBlocks(NumericError):
    pass


class WindowTooNarrow(NumericError):
    pass


class PoleAtOne(NumericError, ValueError):
    pass


class SeriesDiverged(NumericError):
    pass


class EmptySample(NumericError, ValueError):
    pass
