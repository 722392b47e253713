"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``BudgetExceeded`` -> 2, anything derived
from ``PreconditionFailed`` -> 3.
"""


class ListRecError(Exception):
    """Base class for all library errors."""


class BudgetExceeded(ListRecError):
    """An exhaustive computation would exceed the caller's budget."""

    def __init__(self, message, required=None, budget=None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class PreconditionFailed(ListRecError, ValueError):
    """Input violates an operation's precondition."""


class DivisionByZero(PreconditionFailed, ZeroDivisionError):
    pass


class NotPrime(PreconditionFailed):
    pass


class NonSquare(PreconditionFailed):
    pass


class ZeroForm(PreconditionFailed):
    pass


class BadDims(PreconditionFailed):
    pass


class DimMismatch(PreconditionFailed):
    pass


class BadCut(PreconditionFailed):
    pass


class TooSmall(PreconditionFailed):
    pass


class BadT(PreconditionFailed):
    pass


class ColorOutOfRange(PreconditionFailed):
    pass


class DimTooSmall(PreconditionFailed):
    pass


class DegenerateCode(PreconditionFailed):
    pass


class OutOfRange(PreconditionFailed):
    pass


class Exhausted(ListRecError):
    """A bounded resampling loop ran out of attempts."""


class NotFound(ListRecError):
    """A randomized search found nothing within its retry budget."""


class ScanFailed(ListRecError):
    pass
