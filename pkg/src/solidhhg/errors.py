"""Exception types raised by the simulator."""


class SolidHHGError(Exception):
    """Base class for all package errors."""


class ConfigError(SolidHHGError, ValueError):
    """Invalid or unparseable configuration, tagged with the offending key path."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericalError(SolidHHGError, RuntimeError):
    """A numerical procedure failed (eigensolver, integrator drift, ...)."""


class UsageError(SolidHHGError, ValueError):
    """An operation was called with inconsistent or unsupported arguments."""


class ConvergenceWarning(UserWarning):
    """A numerical result may not be converged (e.g. plane-wave basis too small)."""


class NumericsWarning(UserWarning):
    """A diagnostic exceeded its tolerance without invalidating the result."""
