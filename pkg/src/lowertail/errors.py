"""Exception hierarchy shared by every module."""


class LowerTailError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(LowerTailError, ValueError):
    """An argument lies outside its admissible range."""


class InsufficientPointsError(LowerTailError):
    """A k-nearest-neighbour radius is infinite (fewer than k+1 points)."""


class UnstabilizedError(LowerTailError):
    """A score cannot be evaluated because its stabilization radius is infinite."""


class UnboundedCellError(LowerTailError):
    """A Voronoi cell did not close inside the clipping square."""


class BracketError(LowerTailError):
    """The intensity bracket does not contain the target level."""


class RareEventExhaustion(LowerTailError):
    """Rejection sampling ran out of attempts.

    The lowest-H configuration seen is attached as ``best``.
    """

    def __init__(self, message, best=None, best_value=float("inf"), attempts=0):
        super().__init__(message)
        self.best = best
        self.best_value = best_value
        self.attempts = attempts


class InfeasibleSweepError(LowerTailError):
    """A pilot run projects too few hits for the requested sweep."""

    def __init__(self, message, projected_hits=0.0):
        super().__init__(message)
        self.projected_hits = projected_hits
