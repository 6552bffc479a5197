"""Exception hierarchy shared across the package."""


class AlmGVarError(Exception):
    """Base class for all package errors."""


class DataError(AlmGVarError, ValueError):
    """Input data is malformed or inconsistent."""


class MissingColumn(DataError):
    pass


class UnparseableDate(DataError):
    pass


class NonPositivePrice(DataError):
    """A close price is zero, negative or missing.

    ``row`` is the 0-based data row (header excluded) that failed.
    """

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DuplicateDate(DataError):
    pass


class EmptySeries(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class WindowLengthMismatch(DataError):
    pass


class IndexSpaceMismatch(DataError):
    pass


class ConfigError(AlmGVarError, ValueError):
    """Invalid configuration value."""


class InvalidBlockConfig(ConfigError):
    pass


class InvalidWindows(ConfigError):
    pass


class InvalidModel(ConfigError):
    pass


class DomainError(AlmGVarError, ValueError):
    """Argument outside the domain where a formula is defined."""


class EmptyHistory(AlmGVarError, ValueError):
    pass


class DegenerateInput(AlmGVarError, ValueError):
    pass


class OutsideClosedFormWarning(UserWarning):
    """The G-VaR quantile is positive, outside the region where the worst-case cdf closed form holds."""
