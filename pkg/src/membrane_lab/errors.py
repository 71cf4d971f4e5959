"""Exception types shared across the package.

The CLI maps ``InvalidArgumentError`` to exit code 2 and
``NumericFailure`` to exit code 3.
"""


class MembraneLabError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(MembraneLabError, ValueError):
    """An argument violates a documented precondition."""


class ResolutionError(InvalidArgumentError):
    """A grid or horizon is too coarse for the requested accuracy."""


class NumericFailure(MembraneLabError, ArithmeticError):
    """An iteration failed to converge or produced non-finite values."""
