"""Exception types shared across the package."""


class RestriktorError(Exception):
    """Base class for all package errors."""


class InputError(RestriktorError, ValueError):
    """An argument violates an operation's documented precondition."""


class PreconditionError(RestriktorError):
    """A structural precondition (symmetry, witness, ...) does not hold."""


class GridRefusal(RestriktorError):
    """A sampling grid is too coarse or too large for the requested computation."""


class QuadratureRefusal(RestriktorError):
    """The quadrature budget is insufficient for the requested frequency."""
