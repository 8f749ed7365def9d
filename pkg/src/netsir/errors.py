"""Exception types shared across the package."""


class NetsirError(Exception):
    """Base class for package errors."""


class ConfigError(NetsirError):
    """Invalid configuration or arguments (CLI exit code 2)."""


class NumericsError(NetsirError):
    """Numerical failure: solver breakdown, unbracketed root, etc. (CLI exit code 3)."""
