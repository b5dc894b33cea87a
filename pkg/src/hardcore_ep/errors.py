"""Exception hierarchy shared by the library and the CLI."""


class HardcoreEPError(Exception):
    """Base class for all errors raised by hardcore_ep."""


class DomainError(HardcoreEPError, ValueError):
    """An argument lies outside the domain of an operation."""


class ResourceLimitError(HardcoreEPError):
    """A requested basis or matrix would exceed a configured size cap."""


class NumericalError(HardcoreEPError, ArithmeticError):
    """A numerical routine failed (non-convergence, overflow, NaN)."""

    def __init__(self, message, last_good_time=None, diagnostics=None):
        super().__init__(message)
        self.last_good_time = last_good_time
        self.diagnostics = diagnostics or {}


class ConfigError(HardcoreEPError):
    """A run configuration failed schema or semantic validation."""
