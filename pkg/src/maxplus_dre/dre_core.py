"""Riccati problem definition, the bivariate (P, S, Q) flow and reference solvers.

All propagators work backward in time: they take a terminal value at ``t2``
and return the value at ``t1 <= t2`` for

    -dp/dt = A'p + pA + C + p Sigma p.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BlowupError, DimensionError, EscapeError, IntervalError
from .matrix_core import as_square, as_symmetric, checked_inverse, mat_exp, sym

__all__ = [
    "DreProblem",
    "BivariateQuadratic",
    "HamiltonianTransition",
    "riccati_map",
    "bivariate_rhs",
    "rk4_bivariate",
    "rk4_dre",
    "hamiltonian_at",
    "transition",
    "psq_from_transition",
    "davison_maki",
]

PSD_TOL = 1e-12


@dataclass(frozen=True)
class DreProblem:
    """A Riccati equation with coefficients given by a callback.

    Parameters
    ----------
    n : int
        State dimension.
    coeff_eval : callable
        ``coeff_eval(t) -> (A, C, Sigma)``.
    time_invariant : bool
        Declares that `coeff_eval` does not depend on ``t``.
    descriptor : str
        Free-text name.
    relax_psd : bool
        Skip the ``Sigma >= 0`` check.  The algebraic formulas remain valid
        without it, which some benchmark families rely on.
    """

    n: int
    coeff_eval: Callable
    time_invariant: bool = False
    descriptor: str = ""
    relax_psd: bool = False
    psd_tol: float = PSD_TOL

    @classmethod
    def constant(cls, A, C, Sigma, descriptor="", relax_psd=False):
        """Time-invariant problem with fixed coefficient matrices."""
        A = as_square(A, "A")
        C = as_symmetric(C, "C")
        Sigma = as_symmetric(Sigma, "Sigma")
        coeffs = (A, C, Sigma)
        return cls(A.shape[0], lambda t: coeffs, True, descriptor, relax_psd)

    def coefficients(self, t):
        """Evaluate and validate ``(A, C, Sigma)`` at time `t`."""
        A, C, Sigma = self.coeff_eval(t)
        A = as_square(A, "A")
        C = as_symmetric(C, "C")
        Sigma = as_symmetric(Sigma, "Sigma")
        if not A.shape == C.shape == Sigma.shape == (self.n, self.n):
            raise DimensionError(f"coefficients at t={t} do not have shape ({self.n}, {self.n})")
        if not self.relax_psd:
            lo = np.linalg.eigvalsh(Sigma)[0]
            if lo < -self.psd_tol * max(1.0, np.abs(Sigma).max()):
                raise ValueError(f"Sigma({t}) is not positive semidefinite (min eig {lo:.3e})")
        return A, C, Sigma


@dataclass(frozen=True)
class BivariateQuadratic:
    """The triple ``(P, S, Q)`` at time ``t``."""

    P: np.ndarray
    S: np.ndarray
    Q: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        P = as_symmetric(self.P, "P")
        S = as_square(self.S, "S")
        Q = as_symmetric(self.Q, "Q")
        if not P.shape == S.shape == Q.shape:
            raise DimensionError("P, S and Q must share one shape")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self):
        return self.P.shape[0]

    @classmethod
    def identity_seed(cls, n, t=0.0):
        """The seed ``(0, I, 0)``."""
        return cls(np.zeros((n, n)), np.eye(n), np.zeros((n, n)), t)


@dataclass(frozen=True)
class HamiltonianTransition:
    """Blocks of the Hamiltonian transition matrix mapping ``t2`` back to ``t1``."""

    Phi11: np.ndarray
    Phi12: np.ndarray
    Phi21: np.ndarray
    Phi22: np.ndarray
    t1: float
    t2: float

    @classmethod
    def from_matrix(cls, Phi, t1, t2):
        n = Phi.shape[0] // 2
        return cls(Phi[:n, :n], Phi[:n, n:], Phi[n:, :n], Phi[n:, n:], t1, t2)

    @property
    def matrix(self):
        return np.block([[self.Phi11, self.Phi12], [self.Phi21, self.Phi22]])


def riccati_map(A, C, Sigma, p):
    """Right-hand side ``A'p + pA + C + p Sigma p`` of the backward equation."""
    return sym(A.T @ p + p @ A + C + p @ Sigma @ p)


def bivariate_rhs(problem, t, psq):
    """Time derivatives of ``(P, S, Q)``.

    Parameters
    ----------
    problem : DreProblem
    t : float
    psq : BivariateQuadratic

    Returns
    -------
    dP, dS, dQ : ndarray
        ``-(A'P + PA + C + P Sigma P)``, ``-(A + Sigma P)'S`` and ``-S' Sigma S``.
    """
    A, C, Sigma = problem.coefficients(t)
    dP, dS, dQ = _backward_field(A, C, Sigma, psq.P, psq.S)
    return -dP, -dS, -dQ


def _backward_field(A, C, Sigma, P, S):
    # derivatives with respect to backward time tau = t2 - t
    return (
        riccati_map(A, C, Sigma, P),
        (A + Sigma @ P).T @ S,
        sym(S.T @ Sigma @ S),
    )


def _check_interval(t1, t2, steps):
    if t1 > t2:
        raise IntervalError(f"t1={t1} exceeds t2={t2}")
    if steps < 1:
        raise ValueError("steps must be at least 1")


def _rk4_backward(field_at, state, t2, t1, steps, post=None, path=None):
    """Classical RK4 from ``t2`` down to ``t1`` on a tuple of arrays.

    ``field_at(t, state)`` returns derivatives with respect to backward time.
    """
    h = (t2 - t1) / steps
    t = t2

    def axpy(x, k, a):
        out = tuple(xi + a * ki for xi, ki in zip(x, k))
        return post(out) if post else out

    for i in range(steps):
        k1 = field_at(t, state)
        k2 = field_at(t - h / 2, axpy(state, k1, h / 2))
        k3 = field_at(t - h / 2, axpy(state, k2, h / 2))
        k4 = field_at(t - h, axpy(state, k3, h))
        incr = tuple((a + 2 * b + 2 * c + d) / 6 for a, b, c, d in zip(k1, k2, k3, k4))
        state = axpy(state, incr, h)
        t = t2 - (i + 1) * h
        if not all(np.all(np.isfinite(x)) for x in state):
            raise BlowupError(f"non-finite state at t={t}", time=t)
        if path is not None:
            path.append((t, state))
    return state


def rk4_bivariate(problem, terminal, t1, steps, return_path=False):
    """Integrate the (P, S, Q) system from ``terminal.t`` back to `t1` with RK4.

    Parameters
    ----------
    problem : DreProblem
    terminal : BivariateQuadratic
        State at ``t2 = terminal.t``.
    t1 : float
        Target time, ``t1 <= t2``.
    steps : int
        Number of uniform steps.
    return_path : bool
        Also return the list of states after every step.

    Returns
    -------
    BivariateQuadratic or (BivariateQuadratic, list of BivariateQuadratic)

    Raises
    ------
    BlowupError
        If the state stops being finite; ``time`` holds the failing time.
    """
    t2 = terminal.t
    _check_interval(t1, t2, steps)
    if t1 == t2:
        return (terminal, [terminal]) if return_path else terminal

    def field_at(t, x):
        A, C, Sigma = problem.coefficients(t)
        return _backward_field(A, C, Sigma, x[0], x[1])

    def post(x):
        return sym(x[0]), x[1], sym(x[2])

    raw = [] if return_path else None
    with np.errstate(over="ignore", invalid="ignore"):
        P, S, Q = _rk4_backward(
            field_at, (terminal.P, terminal.S, terminal.Q), t2, t1, steps, post, raw
        )
    out = BivariateQuadratic(P, S, Q, t1)
    if not return_path:
        return out
    path = [terminal] + [BivariateQuadratic(*x, t) for t, x in raw[:-1]] + [out]
    return out, path


def rk4_dre(problem, p_terminal, t1, t2, steps):
    """Integrate ``-dp/dt = A'p + pA + C + p Sigma p`` from `t2` back to `t1` with RK4.

    Raises
    ------
    BlowupError
        If ``p`` stops being finite.
    """
    _check_interval(t1, t2, steps)
    p = as_symmetric(p_terminal, "p_terminal")
    if t1 == t2:
        return p

    def field_at(t, x):
        A, C, Sigma = problem.coefficients(t)
        return (riccati_map(A, C, Sigma, x[0]),)

    with np.errstate(over="ignore", invalid="ignore"):
        (p,) = _rk4_backward(field_at, (p,), t2, t1, steps, lambda x: (sym(x[0]),))
    return p


def hamiltonian_at(problem, t):
    """``H(t) = [[A, Sigma], [-C, -A']]``."""
    A, C, Sigma = problem.coefficients(t)
    return np.block([[A, Sigma], [-C, -A.T]])


def transition(problem, t1, t2, steps=100):
    """Transition matrix of ``d/dt [U; V] = H(t) [U; V]`` from `t2` back to `t1`.

    Time-invariant problems use ``expm(-H (t2 - t1))``; otherwise RK4 with
    `steps` uniform steps integrates the 2n x 2n matrix equation.
    """
    _check_interval(t1, t2, max(steps, 1))
    n = problem.n
    if problem.time_invariant:
        Phi = mat_exp(-hamiltonian_at(problem, t2) * (t2 - t1))
    elif t1 == t2:
        Phi = np.eye(2 * n)
    else:
        def field_at(t, x):
            return (-hamiltonian_at(problem, t) @ x[0],)

        with np.errstate(over="ignore", invalid="ignore"):
            (Phi,) = _rk4_backward(field_at, (np.eye(2 * n),), t2, t1, steps)
    return HamiltonianTransition.from_matrix(Phi, t1, t2)


def psq_from_transition(phi, terminal):
    """Map a terminal (P, S, Q) back through a Hamiltonian transition.

    With ``G = Phi11 + Phi12 P2``::

        S1 = G^-T S2
        Q1 = Q2 - S2' G^-1 Phi12 S2
        P1 = (Phi21 + Phi22 P2) G^-1

    Raises
    ------
    EscapeError
        If ``G`` is singular, i.e. the solution escapes inside the interval.
    """
    P2, S2, Q2 = terminal.P, terminal.S, terminal.Q
    G = phi.Phi11 + phi.Phi12 @ P2
    Ginv = checked_inverse(G, EscapeError, "Phi11 + Phi12 P")
    S1 = Ginv.T @ S2
    Q1 = sym(Q2 - S2.T @ Ginv @ phi.Phi12 @ S2)
    P1 = sym((phi.Phi21 + phi.Phi22 @ P2) @ Ginv)
    return BivariateQuadratic(P1, S1, Q1, phi.t1)


def davison_maki(problem, p_terminal, t1, t2, steps=100):
    """Davison-Maki solution ``p(t1) = V U^-1`` with ``[U; V] = Phi [I; p(t2)]``.

    The factor ``U`` loses rank over long horizons; a ``NearSingularWarning``
    is raised when its reciprocal condition number is tiny.

    Raises
    ------
    EscapeError
        If ``U`` is exactly singular.
    """
    p2 = as_symmetric(p_terminal, "p_terminal")
    if t1 == t2:
        return p2
    phi = transition(problem, t1, t2, steps)
    U = phi.Phi11 + phi.Phi12 @ p2
    V = phi.Phi21 + phi.Phi22 @ p2
    return sym(V @ checked_inverse(U, EscapeError, "Davison-Maki factor U"))
