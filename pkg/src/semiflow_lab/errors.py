"""Exception types raised by the operator layers."""


class SemiflowError(Exception):
    """Base class for all library errors."""


class RangeError(SemiflowError, ValueError):
    """Exponential twist would overflow the floating point range."""


class StripError(SemiflowError, ValueError):
    """Frequency lies outside the configured strip ``|Re s| <= eps``."""


class SingularityError(SemiflowError, ArithmeticError):
    """Linear solve of ``I - R(s)`` failed its residual check."""


class PreconditionError(SemiflowError, ValueError):
    """An operation was called on data violating its documented precondition."""


class ValidationError(SemiflowError):
    """A model or roof failed validation; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(SemiflowError, ValueError):
    """Scenario configuration is malformed; ``field`` names the offending path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
