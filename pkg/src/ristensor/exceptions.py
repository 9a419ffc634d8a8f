"""Exception types shared across the package."""


class DegenerateInputError(ValueError):
    """Raised when an operation receives an all-zero matrix or tensor."""


class IdentifiabilityError(ValueError):
    """Raised when the activation pattern cannot be inverted (K < N or rank-deficient)."""


class PlanValidationError(ValueError):
    """Raised when an experiment plan file fails schema or consistency checks."""
