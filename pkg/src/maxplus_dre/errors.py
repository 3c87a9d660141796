"""Exception and warning classes raised across the package."""

import numpy as np

__all__ = [
    "DreError",
    "DimensionError",
    "SymmetryError",
    "SingularMatrixError",
    "MatrixOverflowError",
    "NoDichotomyError",
    "ExtractionError",
    "NonUniqueError",
    "BlowupError",
    "EscapeError",
    "DegeneracyError",
    "IntervalError",
    "ConcavityError",
    "ConvexityError",
    "SeedCollisionError",
    "AssumptionError",
    "ConditioningError",
    "StiffnessError",
    "NearSingularWarning",
    "SingularityCrossingWarning",
    "IndefiniteWarning",
]


class DreError(Exception):
    """Base class for all errors raised by maxplus_dre."""


class DimensionError(DreError, ValueError):
    """Matrix shapes are incompatible."""


class SymmetryError(DreError, ValueError):
    """A matrix that must be symmetric is not, beyond tolerance."""


class SingularMatrixError(DreError, np.linalg.LinAlgError):
    """A matrix that must be inverted is exactly singular."""


class MatrixOverflowError(DreError, OverflowError):
    """A matrix function overflowed the floating point range."""


class NoDichotomyError(DreError):
    """The Hamiltonian has eigenvalues on (or numerically near) the imaginary axis."""


class ExtractionError(DreError):
    """An invariant-subspace basis could not be turned into a Riccati solution."""


class NonUniqueError(DreError):
    """A Lyapunov equation with resonant spectrum has no unique solution."""


class BlowupError(DreError):
    """Non-finite values appeared while integrating.

    Attributes
    ----------
    time : float
        The time at which the state stopped being finite.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class EscapeError(DreError):
    """The propagated solution escapes to infinity (finite escape time).

    Attributes
    ----------
    step : int or None
        Index of the stepping or doubling operation that failed, when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegeneracyError(DreError):
    """A kernel cannot be formed because a required inverse does not exist."""


class IntervalError(DreError):
    """Interval endpoints are empty, reversed or do not match."""


class ConcavityError(DreError):
    """The supremum in a kernel composition does not exist."""


class ConvexityError(DreError):
    """A semiconvex duality transform was applied outside its domain."""


class SeedCollisionError(DreError):
    """The initial condition coincides with the seed's P block (p - P singular)."""


class AssumptionError(DreError):
    """A standing assumption of a propagation method is violated."""


class ConditioningError(DreError):
    """An analytic formula is too ill conditioned to be trusted."""


class StiffnessError(DreError):
    """An adaptive integrator could not make progress."""


class NearSingularWarning(UserWarning):
    """An inverse was computed from a matrix with tiny reciprocal condition."""


class SingularityCrossingWarning(UserWarning):
    """A propagation stepped over a finite-escape singularity.

    The returned value is the algebraic continuation of the solution.
    """


class IndefiniteWarning(UserWarning):
    """A definiteness condition that guarantees validity does not hold."""
