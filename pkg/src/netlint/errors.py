"""Exception types shared across the package."""


class NetlintError(Exception):
    """Base class for input and configuration failures (CLI exit code 2)."""


class DataError(NetlintError, ValueError):
    """Malformed or degenerate input data."""


class ConfigError(NetlintError, ValueError):
    """Rule configuration inconsistent with itself or with the data."""
