"""Exception hierarchy shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters, inputs, or configuration values."""


class CapabilityError(RuntimeError):
    """The request exceeds a documented size limit."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class InvariantError(RuntimeError):
    """An internal invariant was violated."""
