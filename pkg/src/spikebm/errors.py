"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific one that applies.
"""


class SpikebmError(Exception):
    """Base class for all package errors."""


class ConfigError(SpikebmError):
    """Malformed configuration, arguments or input files."""


class ValidationError(SpikebmError):
    """A model or network violates a structural invariant."""


class CapacityError(SpikebmError):
    """Request exceeds a hard size guard (e.g. exact enumeration)."""
