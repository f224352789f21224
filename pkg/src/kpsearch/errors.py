"""Exception types shared across the package."""


class KpsearchError(Exception):
    """Base class for package errors."""


class DataFormatError(KpsearchError, ValueError):
    """An input file violates its expected format."""


class ConvergenceError(KpsearchError, RuntimeError):
    """An iterative computation failed to converge."""
