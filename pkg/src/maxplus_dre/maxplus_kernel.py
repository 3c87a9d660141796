"""Max-plus fundamental solution of the Riccati equation.

A kernel ``I = (I11, I12, I22)`` over ``[t1, t2]`` represents the bivariate
quadratic ``x'I11x/2 + x'I12y + y'I22y/2``.  Its sup-convolution with a
terminal quadratic ``p(t2)`` yields ``p(t1)``, whatever ``p(t2)`` is, so a
single kernel propagates every terminal condition over the interval.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConcavityError,
    DegeneracyError,
    EscapeError,
    IntervalError,
    SeedCollisionError,
    SingularityCrossingWarning,
)
from .matrix_core import (
    RANK_TOL,
    as_symmetric,
    checked_inverse,
    is_negative_definite,
    is_positive_definite,
    pseudo_inverse,
    sym,
)

__all__ = [
    "MaxPlusKernel",
    "DegenerateKernel",
    "kernel_from_bivariate",
    "kernel_from_transition",
    "kernel_compose",
    "kernel_propagate",
    "propagate_via_psq",
    "kernel_from_bivariate_pseudo",
    "is_reachable",
    "MIN_INTERVAL",
    "TIME_TOL",
]

MIN_INTERVAL = 1e-10
TIME_TOL = 1e-9
ORDER_TOL = 1e-9


@dataclass(frozen=True)
class MaxPlusKernel:
    """Quadratic max-plus kernel over ``[t1, t2]``."""

    I11: np.ndarray
    I12: np.ndarray
    I22: np.ndarray
    t1: float
    t2: float

    def __post_init__(self):
        if self.t1 > self.t2:
            raise IntervalError(f"kernel interval [{self.t1}, {self.t2}] is reversed")
        object.__setattr__(self, "I11", sym(self.I11))
        object.__setattr__(self, "I12", np.asarray(self.I12, dtype=float))
        object.__setattr__(self, "I22", sym(self.I22))

    @property
    def n(self):
        return self.I11.shape[0]

    def evaluate(self, x, y):
        """Kernel value ``x'I11x/2 + x'I12y + y'I22y/2``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return float(0.5 * x @ self.I11 @ x + x @ self.I12 @ y + 0.5 * y @ self.I22 @ y)


@dataclass(frozen=True)
class DegenerateKernel:
    """Kernel built with a pseudoinverse, finite only on a subspace.

    Attributes
    ----------
    base : MaxPlusKernel
        Kernel with ``D^+`` in place of ``D^-1``.
    range_basis : ndarray, shape (n, rank)
        Orthonormal basis of ``range(D)``.
    rank : int
    """

    base: MaxPlusKernel
    range_basis: np.ndarray
    rank: int


def _interval(a, b):
    if b.t - a.t < MIN_INTERVAL:
        raise IntervalError(f"interval [{a.t}, {b.t}] is empty or reversed")


def kernel_from_bivariate(a, b, strict=True):
    """Kernel over ``[a.t, b.t]`` from the (P, S, Q) triple at both ends.

    With ``D = Q1 - Q2``::

        I11 = P1 - S1 D^-1 S1'
        I12 = S1 D^-1 S2'
        I22 = -P2 - S2 D^-1 S2'

    Parameters
    ----------
    a, b : BivariateQuadratic
        Values at ``t1`` and ``t2``.
    strict : bool
        Require ``D`` positive definite, which holds when ``Sigma >= 0`` and the
        pair is controllable.  Problems with indefinite ``Sigma`` only need
        ``D`` invertible.

    Raises
    ------
    IntervalError
        If ``t2 - t1`` is below ``MIN_INTERVAL``.
    DegeneracyError
        If ``D`` fails the definiteness or invertibility check.  Uncontrollable
        intervals should use :func:`kernel_from_bivariate_pseudo`.
    """
    _interval(a, b)
    D = a.Q - b.Q
    if strict and not is_positive_definite(D):
        raise DegeneracyError(
            "Q(t1) - Q(t2) is not positive definite; use kernel_from_bivariate_pseudo"
        )
    Dinv = checked_inverse(D, DegeneracyError, "Q(t1) - Q(t2)")
    return MaxPlusKernel(
        a.P - a.S @ Dinv @ a.S.T,
        a.S @ Dinv @ b.S.T,
        -b.P - b.S @ Dinv @ b.S.T,
        a.t,
        b.t,
    )


def kernel_from_transition(phi):
    """Kernel from the Hamiltonian transition blocks, using the seed ``P(t2) = 0``.

    ::

        I11 = Phi21 Phi11^-1 + Phi11^-T Phi12^-1
        I12 = -Phi11^-T Phi12^-1 Phi11
        I22 = Phi12^-1 Phi11

    Entries grow like ``1 / (t2 - t1)`` for short intervals, so short-step
    propagation should go through :func:`propagate_via_psq` instead.

    Raises
    ------
    DegeneracyError
        If ``Phi11`` or ``Phi12`` is singular.
    """
    if phi.t2 - phi.t1 < MIN_INTERVAL:
        raise IntervalError(f"interval [{phi.t1}, {phi.t2}] is empty or reversed")
    F11 = checked_inverse(phi.Phi11, DegeneracyError, "Phi11")
    F12 = checked_inverse(phi.Phi12, DegeneracyError, "Phi12")
    return MaxPlusKernel(
        phi.Phi21 @ F11 + F11.T @ F12,
        -F11.T @ F12 @ phi.Phi11,
        F12 @ phi.Phi11,
        phi.t1,
        phi.t2,
    )


def schur_compose(X11, X12, X22, Y11, Y12, Y22, strict=True, what="kernel"):
    """Shared Schur-complement algebra behind kernel composition.

    Returns the blocks of the composition of ``X`` on the earlier interval with
    ``Y`` on the later one.  With ``M = X22 + Y11``::

        Z11 = X11 - X12 M^-1 X12'
        Z12 = -X12 M^-1 Y12
        Z22 = Y22 - Y12' M^-1 Y12
    """
    Mmat = X22 + Y11
    if strict and not is_negative_definite(Mmat):
        raise ConcavityError(f"{what} composition matrix is not negative definite")
    Minv = checked_inverse(Mmat, ConcavityError, f"{what} composition matrix")
    return (
        sym(X11 - X12 @ Minv @ X12.T),
        -X12 @ Minv @ Y12,
        sym(Y22 - Y12.T @ Minv @ Y12),
    )


def kernel_compose(ab, bc, strict=True):
    """Compose kernels on ``[t1, t2]`` and ``[t2, t3]`` into one on ``[t1, t3]``.

    Parameters
    ----------
    ab, bc : MaxPlusKernel
    strict : bool
        Require ``M = I22_ab + I11_bc`` negative definite, the condition for
        the supremum to exist.  Otherwise only invertibility is needed.

    Raises
    ------
    IntervalError
        If ``ab.t2`` and ``bc.t1`` differ by more than ``TIME_TOL``.
    ConcavityError
        If ``M`` fails the check.
    """
    if abs(ab.t2 - bc.t1) > TIME_TOL:
        raise IntervalError(f"kernels do not meet: {ab.t2} vs {bc.t1}")
    blocks = schur_compose(ab.I11, ab.I12, ab.I22, bc.I11, bc.I12, bc.I22, strict)
    return MaxPlusKernel(*blocks, ab.t1, bc.t2)


def kernel_propagate(k, p_t2, strict=True):
    """Propagate ``p(t2)`` to ``p(t1) = I11 - I12 (p + I22)^-1 I12'``.

    When ``p + I22`` is not negative definite the solution escapes inside the
    interval.  The algebraic continuation is still returned, and with `strict`
    a ``SingularityCrossingWarning`` is issued.

    Raises
    ------
    EscapeError
        If ``p + I22`` is singular, i.e. ``p(t1)`` is infinite.
    """
    p = as_symmetric(p_t2, "p_t2")
    inner = p + k.I22
    if strict and not is_negative_definite(inner):
        warnings.warn(
            f"p + I22 is not negative definite on [{k.t1}, {k.t2}]; "
            "returning the continuation past a singularity",
            SingularityCrossingWarning,
            stacklevel=2,
        )
    inv = checked_inverse(inner, EscapeError, "p + I22")
    return sym(k.I11 - k.I12 @ inv @ k.I12.T)


def propagate_via_psq(a, b, p_t2):
    """Propagate ``p(t2)`` using the (P, S, Q) triples directly.

    ::

        p(t1) = P1 - S1 (Q1 - Q2 - S2'(p - P2)^-1 S2)^-1 S1'

    This is algebraically the same as building the kernel and calling
    :func:`kernel_propagate`, but it avoids the ``1/(t2 - t1)`` growth of the
    kernel entries and so stays accurate for tiny intervals.

    Raises
    ------
    SeedCollisionError
        If ``p - P2`` is singular; pick another seed.
    EscapeError
        If the inner matrix is singular.
    """
    p = as_symmetric(p_t2, "p_t2")
    R = checked_inverse(p - b.P, SeedCollisionError, "p - P(t2)")
    inner = a.Q - b.Q - b.S.T @ R @ b.S
    inv = checked_inverse(inner, EscapeError, "inner matrix")
    return sym(a.P - a.S @ inv @ a.S.T)


def kernel_from_bivariate_pseudo(a, b, rank_tol=RANK_TOL):
    """Kernel for possibly uncontrollable intervals, with ``D^+`` replacing ``D^-1``.

    Where ``S1'x - S2'y`` leaves ``range(D)`` the true kernel is ``-inf``; use
    :func:`is_reachable` to test that.

    Raises
    ------
    IntervalError
        If the interval is empty or ``D = Q1 - Q2`` has negative eigenvalues
        beyond tolerance.
    """
    _interval(a, b)
    D = sym(a.Q - b.Q)
    lam = np.linalg.eigvalsh(D)
    scale = max(1.0, np.max(np.abs(lam)))
    if lam[0] < -ORDER_TOL * scale:
        raise IntervalError(f"Q(t1) - Q(t2) has a negative eigenvalue {lam[0]:.3e}")
    Dp, U1, rank = pseudo_inverse(D, rank_tol)
    base = MaxPlusKernel(
        a.P - a.S @ Dp @ a.S.T,
        a.S @ Dp @ b.S.T,
        -b.P - b.S @ Dp @ b.S.T,
        a.t,
        b.t,
    )
    return DegenerateKernel(base, U1, rank)


def is_reachable(k, a, b, x, y, tol=1e-9):
    """Whether ``S1'x - S2'y`` lies in the range of ``D`` (finite kernel value)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != (a.n,) or y.shape != (a.n,):
        raise ValueError("x and y must be vectors of the state dimension")
    v = a.S.T @ x - b.S.T @ y
    U1 = k.range_basis
    r = v - U1 @ (U1.T @ v)
    return bool(np.linalg.norm(r) <= tol * (1.0 + np.linalg.norm(x) + np.linalg.norm(y)))

