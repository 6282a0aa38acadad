"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs (parameters, configs, states) fail validation."""


class NumericalError(RuntimeError):
    """Raised when a numerical routine detects a failure (NaN, bound violation)."""


class ConcavityError(NumericalError):
    """Raised when a value slice is not unimodal after the rebalancing transform."""
