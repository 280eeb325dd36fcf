"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class InsufficientSignalError(ValueError):
    """Force reading too weak to support a closed-form estimate."""


class NumericalError(RuntimeError):
    """A numerical routine produced non-finite or degenerate results."""
