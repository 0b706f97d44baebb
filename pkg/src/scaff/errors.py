"""Exception hierarchy. The CLI maps these onto exit codes."""


class ScaffError(Exception):
    """Base class for all package errors."""


class ConfigError(ScaffError, ValueError):
    """Invalid configuration: missing columns, bad parameters, unknown criteria."""


class DataError(ScaffError, ValueError):
    """Input data that cannot be used: empty files, non-binary labels, bad widths."""


class TrainingError(DataError):
    """Raised when a model cannot be fit on the given data (e.g. one class only)."""


class UndefinedCorrelationError(ScaffError, ValueError):
    """Pearson correlation requested on a zero-variance vector."""
