"""Exception hierarchy shared by every module of the package."""


class MoveError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentsError(MoveError, ValueError):
    """Raised when arguments violate a documented precondition."""


class LengthMismatchError(MoveError, ValueError):
    """Raised when two fitness vectors (or images) do not line up."""


class RunAbortedError(MoveError, RuntimeError):
    """Raised when a child cannot be evaluated; carries the parent cell id."""

    def __init__(self, message, cell_id=None):
        super().__init__(message)
        self.cell_id = cell_id


class CalibrationError(MoveError, ValueError):
    """Raised when a normalization table cannot be built or is incomplete."""


class UndefinedStatisticError(MoveError, ValueError):
    """Raised when a statistic is requested on data that cannot define it."""


class DegenerateTestError(UndefinedStatisticError):
    """Raised when a rank test is requested on samples with no variation."""


class LineageError(MoveError, KeyError):
    """Raised when a parent chain is broken or a uid is unknown."""


class ConfigError(MoveError, ValueError):
    """Raised for invalid experiment configuration."""
