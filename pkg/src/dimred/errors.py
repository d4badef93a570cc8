"""Exception hierarchy.

Data problems (bad shapes, non-finite input, degenerate columns) raise
``DataError``; failures of the numerical procedures themselves raise
``NumericalError``.  The CLI maps these onto distinct exit codes.
"""


class DimRedError(Exception):
    """Base class for all package errors."""


class DataError(DimRedError, ValueError):
    """Input data violates a precondition."""


class ZeroScaleError(DataError):
    """A column (or vector) has zero estimated scale."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class NumericalError(DimRedError, ArithmeticError):
    """A numerical procedure could not produce a valid result."""


class RankError(NumericalError):
    """A design or deflated data matrix lost rank."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class ConvergenceError(NumericalError):
    """An iterative optimizer hit its iteration limit.

    ``best`` holds the best iterate found so far.
    """

    def __init__(self, message, best=None, value=None):
        super().__init__(message)
        self.best = best
        self.value = value


class IndexEvaluationError(NumericalError):
    """A projection index raised or returned a non-finite value."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction
