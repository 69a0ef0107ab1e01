"""Exception hierarchy shared by all ctrwlab modules."""


class CtrwError(Exception):
    """Base class for ctrwlab errors."""


class DomainError(CtrwError, ValueError):
    """An argument lies outside the set where the operation is defined."""


class ParameterDomainError(DomainError):
    """A distribution or model parameter is out of range."""


class ShapeError(CtrwError, ValueError):
    """Array arguments have incompatible lengths or ordering."""


class PreconditionError(CtrwError, ValueError):
    """A modelling precondition (e.g. mean-zero jumps) is violated."""


class FitError(CtrwError, ValueError):
    """Not enough data to fit the requested curve."""


class NumericError(CtrwError, ArithmeticError):
    """A coefficient produced a non-finite value.

    ``state`` holds the offending position(s) so a caller can report them.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
