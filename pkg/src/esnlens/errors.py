"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class EsnError(Exception):
    exit_code = 1


class ConfigError(EsnError, ValueError):
    """Invalid hyperparameters, config keys or option values."""

    exit_code = 2


class ShapeError(ConfigError):
    """Array dimensions that do not fit the model or each other."""


class DataError(EsnError):
    """Unreadable, malformed or missing input data."""

    exit_code = 3

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class NumericError(EsnError, ArithmeticError):
    """A numerical procedure failed (non-convergence, singular system)."""

    exit_code = 4

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class StateError(EsnError, RuntimeError):
    """Operation not valid for the object's current state (e.g. untrained)."""

    exit_code = 4
