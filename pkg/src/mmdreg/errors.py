"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration and data-format
problems exit with 2, numerical failures with 3.
"""


class ConfigError(ValueError):
    """Invalid configuration: unknown names, out-of-range settings."""


class DomainError(ValueError):
    """Input outside an operation's mathematical domain."""


class FormatError(ValueError):
    """Malformed on-disk data (CSV rows, config files)."""


class NumericalError(RuntimeError):
    """A computation produced non-finite or otherwise unusable values."""
