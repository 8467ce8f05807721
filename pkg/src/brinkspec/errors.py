"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument lies outside the domain where a function is defined."""


class ParamError(ValueError):
    """Invalid parameter combination."""


class ShapeError(ValueError):
    """Array length does not match the operator size."""


class UnsupportedError(TypeError):
    """Operation not available for this kind of potential."""


class ConvergenceError(RuntimeError):
    """Iterative procedure ran out of budget before meeting its tolerance."""


class BracketError(RuntimeError):
    """A bisection predicate did not change sign monotonically over the range.

    ``trace`` holds the (parameter, value) pairs evaluated before giving up.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])
