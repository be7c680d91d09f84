"""Exception types raised across the package."""


class AirbenchError(Exception):
    """Base class for all airbench errors."""


class EmptyRangeError(AirbenchError):
    """A stamp range of zero months was requested."""


class InvalidSplitError(AirbenchError):
    """A train/test split cannot be formed (too short or empty side)."""


class UnrecoverableSeriesError(AirbenchError):
    """Every point of a series is missing; nothing can be derived from it."""


class InsufficientDataError(AirbenchError):
    """Not enough present points to fit or window a model."""


class SingularFitError(AirbenchError):
    """The unpenalized normal matrix is singular."""


class NumericError(AirbenchError):
    """A non-finite value entered or left a numeric kernel."""


class DivergenceError(NumericError):
    """Training produced a non-finite loss."""


class NoViableModelError(AirbenchError):
    """Every grid-search candidate failed to train."""


class InvalidSpecError(AirbenchError):
    """A synthetic-series spec violates its invariants."""


class InvalidInputError(AirbenchError):
    """Metric inputs are empty or of mismatched length."""


class CsvParseError(AirbenchError):
    """A CSV row could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MonthGapError(AirbenchError):
    """A (state, pollutant) group has a hole in its monthly timeline."""


class DuplicateRecordError(AirbenchError):
    """Two rows share the same (state, pollutant, date) key."""


class UsageError(AirbenchError):
    """Bad command-line arguments or config file contents."""
