"""Time-invariant Riccati equations: doubling algorithms and closed-form solvers.

For constant coefficients the kernel over ``[-2D, 0]`` is the kernel over
``[-D, 0]`` composed with a time-shifted copy of itself, so ``M`` doublings
reach a horizon ``2**M * D`` at logarithmic cost.  Three variants are
provided:

* Method A doubles the max-plus kernel and steps with it.
* Method B doubles the dual-space kernel and steps in the dual.
* Method C doubles the (P, S, Q) triple itself and steps with it.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dre_core import (
    BivariateQuadratic,
    HamiltonianTransition,
    psq_from_transition,
    rk4_bivariate,
)
from .errors import (
    ConditioningError,
    ConvexityError,
    DimensionError,
    EscapeError,
    SeedCollisionError,
)
from .matrix_core import (
    as_square,
    as_symmetric,
    care_extremal_solutions,
    checked_inverse,
    inverse,
    is_positive_definite,
    lyapunov_solve,
    mat_exp,
    sym,
    van_loan_integral,
)
from .maxplus_kernel import MaxPlusKernel, kernel_from_bivariate, kernel_propagate, schur_compose
from .semiconvex import DualKernelB, DualityKernel, dual_kernel_B, dual_kernel_propagate

__all__ = [
    "TiProblem",
    "DoublingSchedule",
    "seed_psq",
    "method_a_kernel",
    "method_a_solve",
    "method_b_kernel",
    "method_b_solve",
    "method_c_double",
    "method_c_solve",
    "leipnik_solve",
    "rusnak_solve",
    "flop_model",
    "ANALYTIC_GUARD",
]

# largest |Re(lambda(H))| * delta handled by one analytic exponential
ANALYTIC_GUARD = 20.0
PSD_TOL = 1e-12


@dataclass(frozen=True)
class TiProblem:
    """Constant coefficients ``(A, C, Sigma)``.

    ``relax_psd`` skips the ``Sigma >= 0`` check and relaxes the sign
    conditions that rely on it, leaving only invertibility requirements.
    """

    A: np.ndarray
    C: np.ndarray
    Sigma: np.ndarray
    relax_psd: bool = False
    descriptor: str = ""

    def __post_init__(self):
        A = as_square(self.A, "A")
        C = as_symmetric(self.C, "C")
        Sigma = as_symmetric(self.Sigma, "Sigma")
        if not A.shape == C.shape == Sigma.shape:
            raise DimensionError("A, C and Sigma must share one shape")
        if not self.relax_psd:
            lo = np.linalg.eigvalsh(Sigma)[0]
            if lo < -PSD_TOL * max(1.0, np.abs(Sigma).max()):
                raise ValueError(f"Sigma is not positive semidefinite (min eig {lo:.3e})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Sigma", Sigma)

    @property
    def n(self):
        return self.A.shape[0]

    # DreProblem interface, so the dre_core propagators accept a TiProblem
    time_invariant = True

    def coefficients(self, t=0.0):
        return self.A, self.C, self.Sigma

    @property
    def hamiltonian(self):
        return np.block([[self.A, self.Sigma], [-self.C, -self.A.T]])


@dataclass(frozen=True)
class DoublingSchedule:
    """Base step ``delta``, ``M`` doublings, ``N`` steps and ``Nrk`` RK4 seed steps.

    The horizon is ``N * 2**M * delta``.  ``Nrk = 0`` selects the analytic seed.
    """

    delta: float
    M: int = 0
    N: int = 1
    Nrk: int = 1

    def __post_init__(self):
        if not (self.delta >= 1e-10 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be at least 1e-10, got {self.delta}")
        if self.M < 0 or self.N < 1 or self.Nrk < 0:
            raise ValueError("need M >= 0, N >= 1 and Nrk >= 0")

    @classmethod
    def for_horizon(cls, T, M=0, N=1, Nrk=1):
        """Schedule whose horizon is `T`."""
        if M < 0 or N < 1:
            raise ValueError("need M >= 0 and N >= 1")
        return cls(T / (N * 2**M), M, N, Nrk)

    @property
    def total_T(self):
        return self.N * 2**self.M * self.delta

    @property
    def step(self):
        """Length ``2**M * delta`` of one stepping interval."""
        return 2**self.M * self.delta


def _seed(problem, seed):
    if seed is None:
        return BivariateQuadratic.identity_seed(problem.n)
    return BivariateQuadratic(seed.P, seed.S, seed.Q, 0.0)


def seed_psq(problem, delta, nrk=1, seed=None):
    """The (P, S, Q) flow at ``-delta`` started from `seed` at time 0.

    Parameters
    ----------
    problem : TiProblem
    delta : float
    nrk : int
        RK4 steps; ``0`` evaluates the flow through the Hamiltonian
        exponential instead.  When ``|Re(lambda(H))| * delta`` exceeds
        ``ANALYTIC_GUARD`` the exponential is applied over equal sub-intervals.
    seed : DualityKernel or BivariateQuadratic, optional
        Defaults to ``(0, I, 0)``.

    Returns
    -------
    BivariateQuadratic
    """
    start = _seed(problem, seed)
    if nrk > 0:
        return rk4_bivariate(problem, start, -delta, nrk)
    H = problem.hamiltonian
    rate = np.max(np.abs(np.linalg.eigvals(H).real))
    pieces = max(1, math.ceil(rate * delta / ANALYTIC_GUARD))
    h = delta / pieces
    Phi = mat_exp(-H * h)
    psq = start
    for i in range(pieces):
        t2 = -i * h
        psq = psq_from_transition(HamiltonianTransition.from_matrix(Phi, t2 - h, t2), psq)
    return BivariateQuadratic(psq.P, psq.S, psq.Q, -delta)


def method_a_kernel(problem, sched, seed=None, strict=True):
    """Kernel over ``[-2**M delta, 0]`` built by ``M`` doublings of the seed kernel."""
    start = _seed(problem, seed)
    a = seed_psq(problem, sched.delta, sched.Nrk, start)
    k = kernel_from_bivariate(a, start, strict)
    for _ in range(sched.M):
        L = k.t2 - k.t1
        blocks = schur_compose(k.I11, k.I12, k.I22, k.I11, k.I12, k.I22, strict)
        k = MaxPlusKernel(*blocks, -2 * L, 0.0)
    return k


def method_a_solve(problem, p0, sched, seed=None, strict=True):
    """Propagate `p0` from 0 to ``-T`` with the doubled max-plus kernel.

    Parameters
    ----------
    problem : TiProblem
    p0 : array_like
    sched : DoublingSchedule
    seed : DualityKernel, optional
        Seed of the bivariate flow; the kernel does not depend on it.
    strict : bool
        Enforce definiteness of the composition matrices and warn on
        singularity crossings.

    Raises
    ------
    ConcavityError
        If a doubling fails.
    EscapeError
        If a stepping inverse is singular; ``step`` holds its index.
    """
    p = as_symmetric(p0, "p0")
    k = method_a_kernel(problem, sched, seed, strict)
    for j in range(sched.N):
        try:
            p = kernel_propagate(k, p, strict)
        except EscapeError as exc:
            raise EscapeError(str(exc), step=j) from exc
    return p


def method_b_kernel(problem, sched, phi0, strict=True):
    """Dual kernel over ``[-2**M delta, 0]`` built by doubling ``B`` over one seed step."""
    start = _seed(problem, phi0)
    a = seed_psq(problem, sched.delta, sched.Nrk, start)
    B = dual_kernel_B(a, start, strict)
    for _ in range(sched.M):
        L = B.t2 - B.t1
        blocks = schur_compose(B.B11, B.B12, B.B22, B.B11, B.B12, B.B22, strict, "dual kernel")
        B = DualKernelB(*blocks, -2 * L, 0.0)
    return B


def method_b_solve(problem, p0, sched, phi0=None, strict=True):
    """Propagate `p0` to ``-T`` through the dual space.

    Each step maps ``p`` to its dual under ``phi0``, applies the doubled dual
    kernel and maps back::

        p <- -S0 (B11 - B12 (B22 - S0'(p - P0)^-1 S0 - Q0)^-1 B12' + Q0)^-1 S0' + P0

    Parameters
    ----------
    phi0 : DualityKernel, optional
        Duality kernel and seed of the flow; defaults to ``(0, I, 0)``.
    strict : bool
        Require ``P(-delta) - P0`` and ``p0 - P0`` positive definite.

    Raises
    ------
    AssumptionError
        If ``P(-delta) - P0`` fails the definiteness check.
    ConvexityError
        If ``p0 - P0`` is not positive definite under `strict`.
    EscapeError
        If a stepping inverse is singular.
    """
    phi = DualityKernel.of(_seed(problem, phi0))
    p = as_symmetric(p0, "p0")
    if strict and not is_positive_definite(p - phi.P):
        raise ConvexityError("p0 - P0 is not positive definite")
    B = method_b_kernel(problem, sched, phi, strict)
    S0, P0, Q0 = phi.S, phi.P, phi.Q
    for j in range(sched.N):
        try:
            R = checked_inverse(p - P0, SeedCollisionError, "p - P0")
            q = sym(-S0.T @ R @ S0 - Q0)
            q = dual_kernel_propagate(B, q, strict)
            Z = checked_inverse(q + Q0, EscapeError, "q + Q0")
            p = sym(-S0 @ Z @ S0.T + P0)
        except EscapeError as exc:
            raise EscapeError(str(exc), step=j) from exc
    return p


def method_c_double(problem, sched, seed=None):
    """(P, S, Q) at ``-2**M delta`` by ``M`` direct doublings of the triple.

    With ``(P0, S0, Q0)`` the seed and ``(P1, S1, Q1)`` the current value at
    ``-L``, the value at ``-2L`` is::

        G  = (Q0 - Q1) + S0'(P1 - P0)^-1 S0
        P2 = P1 + S1 G^-1 S1'
        S2 = S1 G^-1 S0'(P1 - P0)^-1 S1
        Q2 = Q1 + S1'((P0 - P1) + S0 (Q1 - Q0)^-1 S0')^-1 S1

    Raises
    ------
    EscapeError
        If an inner matrix is singular; ``step`` holds the doubling index.
    """
    start = _seed(problem, seed)
    P0, S0, Q0 = start.P, start.S, start.Q
    cur = seed_psq(problem, sched.delta, sched.Nrk, start)
    for m in range(sched.M):
        P1, S1, Q1 = cur.P, cur.S, cur.Q
        try:
            Ri = checked_inverse(P1 - P0, EscapeError, "P(-L) - P0")
            Wi = checked_inverse(Q1 - Q0, EscapeError, "Q(-L) - Q0")
            Gi = checked_inverse(Q0 - Q1 + S0.T @ Ri @ S0, EscapeError, "doubling matrix")
            Ki = checked_inverse(P0 - P1 + S0 @ Wi @ S0.T, EscapeError, "doubling matrix")
        except EscapeError as exc:
            raise EscapeError(str(exc), step=m) from exc
        cur = BivariateQuadratic(
            P1 + S1 @ Gi @ S1.T,
            S1 @ Gi @ S0.T @ Ri @ S1,
            Q1 + S1.T @ Ki @ S1,
            2 * cur.t,
        )
    return cur


def method_c_solve(problem, p0, sched, seed=None):
    """Propagate `p0` to ``-T`` with the doubled (P, S, Q) triple.

    Each of the ``N`` steps applies::

        p <- P_t - S_t (Q_t - Q0 - S0'(p - P0)^-1 S0)^-1 S_t'

    Raises
    ------
    SeedCollisionError
        If ``p - P0`` is singular.
    EscapeError
        On a singular doubling or stepping matrix.
    """
    start = _seed(problem, seed)
    P0, S0, Q0 = start.P, start.S, start.Q
    cur = method_c_double(problem, sched, start)
    p = as_symmetric(p0, "p0")
    for j in range(sched.N):
        try:
            R = checked_inverse(p - P0, SeedCollisionError, "p - P0")
            inner = cur.Q - Q0 - S0.T @ R @ S0
            p = sym(cur.P - cur.S @ checked_inverse(inner, EscapeError, "inner matrix") @ cur.S.T)
        except EscapeError as exc:
            raise EscapeError(str(exc), step=j) from exc
    return p


def leipnik_solve(problem, p0, t, min_rcond=1e-10):
    """Closed-form solution built from the two extremal algebraic solutions.

    With ``Acl = A + Sigma P_plus`` and ``Y = (P_minus - P_plus)^-1``::

        p(-t) = P_plus + (e^{-t Acl} ((p0 - P_plus)^-1 - Y) e^{-t Acl'} + Y)^-1

    ``Acl`` is anti-stable, so the exponentials decay and the formula is
    well behaved for long horizons.

    Raises
    ------
    NoDichotomyError
        If the Hamiltonian has imaginary-axis eigenvalues.
    ConditioningError
        If ``P_plus - P_minus`` is nearly singular; use :func:`rusnak_solve`.
    SeedCollisionError
        If ``p0 - P_plus`` is singular.
    EscapeError
        If the final inverse is singular.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    p0 = as_symmetric(p0, "p0")
    A, Sigma = problem.A, problem.Sigma
    Pm, Pp = care_extremal_solutions(A, problem.C, Sigma)
    rep = inverse(Pp - Pm) if np.any(Pp - Pm) else None
    if rep is None or rep.rcond_estimate < min_rcond:
        raise ConditioningError("extremal solutions nearly coincide; use rusnak_solve")
    Q0 = rep.value
    Acl = A + Sigma @ Pp
    lyap = lyapunov_solve(-Acl.T, Sigma)
    if np.linalg.norm(lyap - Q0) > 1e-6 * (1.0 + np.linalg.norm(Q0)):
        raise ConditioningError("(P_plus - P_minus)^-1 does not solve its Lyapunov equation")
    Y = -Q0
    Ginv = mat_exp(-t * Acl)
    X = Ginv @ (checked_inverse(p0 - Pp, SeedCollisionError, "p0 - P_plus") - Y) @ Ginv.T + Y
    return sym(Pp + checked_inverse(sym(X), EscapeError, "Leipnik resolvent"))


def rusnak_solve(problem, p0, t, P=None, care_tol=1e-9):
    """Closed-form solution around any algebraic solution ``P``.

    With ``B = (A + Sigma P)'``, ``pb0 = p0 - P`` and ``W`` the Van Loan
    integral of ``(B, Sigma)`` over ``[0, t]``::

        p(-t) = P + e^{tB} pb0 (I - W pb0)^-1 e^{tB'}

    No inverse of ``pb0`` is needed, so ``p0 = P`` and coincident extremal
    solutions are fine.

    Parameters
    ----------
    P : array_like, optional
        Algebraic solution; defaults to ``P_minus``.

    Raises
    ------
    ValueError
        If `P` does not solve the algebraic equation to `care_tol`.
    EscapeError
        If ``I - W pb0`` is singular.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    p0 = as_symmetric(p0, "p0")
    A, C, Sigma = problem.A, problem.C, problem.Sigma
    if P is None:
        P, _ = care_extremal_solutions(A, C, Sigma)
    P = as_symmetric(P, "P")
    res = np.linalg.norm(A.T @ P + P @ A + C + P @ Sigma @ P)
    if res > care_tol * (1.0 + np.linalg.norm(P) ** 2):
        raise ValueError(f"P is not an algebraic solution (residual {res:.2e})")
    n = A.shape[0]
    B = (A + Sigma @ P).T
    pb0 = p0 - P
    W = van_loan_integral(B, Sigma, t)
    E = mat_exp(t * B)
    R = checked_inverse(np.eye(n) - W @ pb0, EscapeError, "I - W (p0 - P)")
    return sym(P + E @ pb0 @ R @ E.T)


_FLOPS = {
    "A": ((16, Fraction(37, 3), Fraction(11, 3)), (18, Fraction(19, 3), Fraction(11, 3))),
    "B": ((16, Fraction(37, 3), Fraction(11, 3)), (54, 19, 11)),
    "C": ((67, Fraction(94, 3), Fraction(44, 3)), (36, Fraction(38, 3), Fraction(22, 3))),
}


def flop_model(method, n, M, N, Nrk):
    """Flop count model of the doubling methods, as an exact ``Fraction``.

    Every method pays ``Nrk (32 n^3 + 3 n^2)`` for the seed.  Methods A and B
    then pay ``16 n^2 + 37 n^3/3 + 11 n/3`` for the seed kernel and each of
    the ``M`` doublings; Method C pays ``67 n^2 + 94 n^3/3 + 44 n/3`` per
    doubling only.  The per-step costs are ``18 n^2 + 19 n^3/3 + 11 n/3``
    (A), ``54 n^2 + 19 n^3 + 11 n`` (B) and ``36 n^2 + 38 n^3/3 + 22 n/3`` (C).
    """
    key = str(method).upper()
    if key not in _FLOPS:
        raise ValueError(f"unknown method {method!r}")
    if min(n, M, N, Nrk) < 0:
        raise ValueError("counts must be nonnegative")
    n = Fraction(n)
    (d2, d3, d1), (s2, s3, s1) = _FLOPS[key]
    seed = Nrk * (32 * n**3 + 3 * n**2)
    kernels = M if key == "C" else M + 1
    double = kernels * (d2 * n**2 + d3 * n**3 + d1 * n)
    step = N * (s2 * n**2 + s3 * n**3 + s1 * n)
    return Fraction(seed + double + step)
