"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its fixed taxonomy (1 input, 2 budget, 3 numeric).
"""


class BLError(Exception):
    exit_code = 3


class InputError(BLError, ValueError):
    exit_code = 1


class CoprimalityError(InputError):
    """P and Q share a root (or both vanish at a point)."""


class MeasureError(InputError):
    pass


class EmptySetError(InputError):
    pass


class GeometryUnderflowError(InputError):
    pass


class ExceptionalPointError(InputError):
    """Base point has a finite backward orbit."""


class BudgetExceeded(BLError):
    exit_code = 2

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class WalkBudgetExceeded(BudgetExceeded):
    def __init__(self, message, completed=0, best=None):
        super().__init__(message, best=best)
        self.completed = completed


class RootConvergenceError(BLError):
    def __init__(self, message, location=None, residual=None):
        super().__init__(message)
        self.location = location
        self.residual = residual


class NoRepellingPointFound(BLError):
    pass


class NoValidBallError(BLError):
    pass


class SolverError(BLError):
    """An iterative solver stopped before certifying its result."""
