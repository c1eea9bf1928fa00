"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`CDDError`
so callers (and the CLI exit-code mapping) can catch the whole family.
"""
from __future__ import annotations


class CDDError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CDDError, ValueError):
    pass


class NotHermitian(CDDError, ValueError):
    pass


class UnsupportedCount(CDDError, ValueError):
    pass


class IndexOutOfRange(CDDError, IndexError):
    pass


class NegativeWidth(CDDError, ValueError):
    pass


class NotNormalized(CDDError, ValueError):
    pass


class SequenceFileInvalid(CDDError, ValueError):
    pass


class SynthesisFailed(CDDError, RuntimeError):
    pass


class NegativeLevel(CDDError, ValueError):
    pass


class NonPositiveRepetitions(CDDError, ValueError):
    pass


class TooFewIntervals(CDDError, ValueError):
    """More elementary gate operations than inter-pulse intervals.

    Raise the concatenation level or allow packing of several operations
    into one interval.
    """


class BudgetExceeded(CDDError, RuntimeError):
    pass


class IncompleteSeries(CDDError, ValueError):
    pass


class IncompleteGrid(CDDError, ValueError):
    pass


class ConfigError(CDDError, ValueError):
    """Base for configuration problems (CLI exit code 2)."""


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class ValidationError(ConfigError):
    pass
