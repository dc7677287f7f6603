"""Exception types shared across the package.

Validation errors signal malformed inputs and map to CLI exit code 2;
computation errors signal failures of well-posed runs and map to exit code 1.
"""


class IcipwError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(IcipwError, ValueError):
    """Malformed or out-of-contract input (files, columns, shapes, ranges)."""


class ComputationError(IcipwError, RuntimeError):
    """A well-formed computation failed at runtime."""


class ConvergenceError(ComputationError):
    """An iterative solver diverged, stalled, or produced non-finite values."""


class EmptyArmError(ComputationError):
    """A treatment arm required by the computation contains no rows."""
