"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad ranges, malformed files, degenerate settings."""


class CapacityError(ValueError):
    """Problem size exceeds what exact enumeration supports."""


class NumericError(ArithmeticError):
    """Non-finite values where finite numbers are required."""
