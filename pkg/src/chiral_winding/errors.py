"""Domain errors.

Each error subclasses the built-in exception a caller would already catch
(``ValueError`` for bad input, ``ArithmeticError`` for numerical breakdown,
``RuntimeError`` for failed runs), so generic handlers keep working.
"""


class ModelError(ValueError):
    """Coefficient model is malformed or degenerate (v(p) = 0 somewhere)."""


class BranchPointError(ArithmeticError):
    """ln S(p, q) is undefined because v(p) and v(q) are orthogonal."""


class NotParallelError(ValueError):
    """A point handed in as a parallel point fails the parallelism tolerance."""


class NearSingularError(ArithmeticError):
    """K(p) is numerically singular at the requested parameter."""

    def __init__(self, message: str, p: float | None = None) -> None:
        super().__init__(message)
        self.p = p


class NonConvergentError(ArithmeticError):
    """Adaptive phase unwrapping hit its depth limit."""


class InconsistentWindingError(ArithmeticError):
    """Accumulated phase is not close to an integer multiple of 2*pi."""


class RootOnCircleError(ArithmeticError):
    """A zero of det K lies on the unit circle; the winding is not defined."""


class IllConditionedError(ArithmeticError):
    """Determinant evaluation is too close to a parallel configuration."""


class MulticriticalPointError(ArithmeticError):
    """Parallelism curves cross (the Hessian of Re L vanishes)."""

    def __init__(self, message: str, t: float | None = None) -> None:
        super().__init__(message)
        self.t = t


class NonClosureError(RuntimeError):
    """Curve continuation did not return to its starting point."""


class PoleEncounteredError(ArithmeticError):
    """b(p) vanishes at a query point, so kappa(p) = a(p)/b(p) is infinite."""


class TooManyExclusionsError(RuntimeError):
    """More than the allowed share of realizations had to be excluded."""

    def __init__(self, message: str, excluded: int = 0, samples: int = 0) -> None:
        super().__init__(message)
        self.excluded = excluded
        self.samples = samples


class MismatchedConfigError(ValueError):
    """A report and a prediction refer to different N or different models."""
