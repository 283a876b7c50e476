"""Exception hierarchy shared by every stage of the pipeline."""


class KansError(Exception):
    """Base class for all errors raised by this package."""


class DataError(KansError, ValueError):
    """Malformed, empty or otherwise unusable input data."""


class DegenerateVariableError(DataError):
    """One or more variables have (near) zero range or variance."""

    def __init__(self, message, variables=()):
        super().__init__(message)
        self.variables = list(variables)


class ShapeError(KansError, ValueError):
    """Array, window or variable-count mismatch."""


class ConfigError(KansError, ValueError):
    """Invalid configuration key or value."""


class NonFiniteError(KansError, FloatingPointError):
    """A NaN or Inf appeared where finite values are required."""
