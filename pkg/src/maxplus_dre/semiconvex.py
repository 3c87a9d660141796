"""Semiconvex duality for quadratics and the dual-space propagation kernel.

A duality kernel ``phi = (P, S, Q)`` is the bivariate quadratic
``x'Px/2 + x'Sz + z'Qz/2``.  The dual of ``x'px/2`` under it is ``z'qz/2``
with ``q = -S'(p - P)^-1 S - Q``.  Everything here works on the parameter
matrices directly.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .dre_core import riccati_map
from .errors import (
    AssumptionError,
    ConditioningError,
    ConvexityError,
    DimensionError,
    EscapeError,
    IndefiniteWarning,
    IntervalError,
    SingularMatrixError,
    SingularityCrossingWarning,
)
from .matrix_core import (
    as_square,
    as_symmetric,
    checked_inverse,
    is_negative_definite,
    is_positive_definite,
    sym,
)
from .maxplus_kernel import MIN_INTERVAL, TIME_TOL, schur_compose

__all__ = [
    "DualityKernel",
    "DualDreCoefficients",
    "SymplecticK",
    "DualKernelB",
    "dual_value",
    "primal_value",
    "dual_coefficients",
    "dual_hamiltonian",
    "matching_residual",
    "k_matrix",
    "similarity_residual",
    "dual_kernel_B",
    "dual_kernel_compose",
    "dual_kernel_propagate",
    "stationary_dual",
]


@dataclass(frozen=True)
class DualityKernel:
    """Constant duality kernel parameters ``(P, S, Q)``."""

    P: np.ndarray
    S: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        P = as_symmetric(self.P, "P")
        S = as_square(self.S, "S")
        Q = as_symmetric(self.Q, "Q")
        if not P.shape == S.shape == Q.shape:
            raise DimensionError("P, S and Q must share one shape")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self):
        return self.P.shape[0]

    @classmethod
    def identity(cls, n):
        """The kernel ``(0, I, 0)``."""
        return cls(np.zeros((n, n)), np.eye(n), np.zeros((n, n)))

    @classmethod
    def of(cls, psq):
        """Duality kernel with the parameters of any (P, S, Q) carrier."""
        return psq if isinstance(psq, cls) else cls(psq.P, psq.S, psq.Q)


@dataclass(frozen=True)
class DualDreCoefficients:
    """Coefficients ``(A_bar, C_bar, Sigma_bar)`` of the Riccati equation met by the dual."""

    A_bar: np.ndarray
    C_bar: np.ndarray
    Sigma_bar: np.ndarray


@dataclass(frozen=True)
class SymplecticK:
    """Similarity transform between the primal and dual Hamiltonians."""

    K: np.ndarray
    K_inv: np.ndarray


@dataclass(frozen=True)
class DualKernelB:
    """Dual-space propagation kernel ``(B11, B12, B22)`` over ``[t1, t2]``."""

    B11: np.ndarray
    B12: np.ndarray
    B22: np.ndarray
    t1: float
    t2: float

    def __post_init__(self):
        if self.t2 - self.t1 < MIN_INTERVAL:
            raise IntervalError(f"interval [{self.t1}, {self.t2}] is empty or reversed")
        object.__setattr__(self, "B11", sym(self.B11))
        object.__setattr__(self, "B12", np.asarray(self.B12, dtype=float))
        object.__setattr__(self, "B22", sym(self.B22))


def dual_value(p, phi, strict=True):
    """Semiconvex dual ``q = -S'(p - P)^-1 S - Q``.

    Parameters
    ----------
    p : array_like
        Primal quadratic matrix.
    phi : DualityKernel or BivariateQuadratic
    strict : bool
        Require ``p - P`` positive definite, under which the dual is a true
        infimum.  Otherwise only invertibility is needed.

    Raises
    ------
    ConvexityError
        If ``p - P`` fails the check.
    """
    p = as_symmetric(p, "p")
    R = p - phi.P
    if strict and not is_positive_definite(R):
        raise ConvexityError("p - P is not positive definite")
    Rinv = checked_inverse(R, ConvexityError, "p - P")
    return sym(-phi.S.T @ Rinv @ phi.S - phi.Q)


def primal_value(q, phi, warn=True):
    """Inverse transform ``p = -S(q + Q)^-1 S' + P``.

    A ``IndefiniteWarning`` is issued when `warn` is set and ``q + Q`` is not
    negative definite, since the dual then does not represent a value
    function.

    Raises
    ------
    SingularMatrixError
        If ``q + Q`` is singular.
    """
    q = as_symmetric(q, "q")
    R = q + phi.Q
    if warn and not is_negative_definite(R):
        warnings.warn("q + Q is not negative definite", IndefiniteWarning, stacklevel=2)
    Rinv = checked_inverse(R, SingularMatrixError, "q + Q")
    return sym(-phi.S @ Rinv @ phi.S.T + phi.P)


def _flow_values(A, C, Sigma, phi):
    # backward-time derivatives of the bivariate flow evaluated at phi
    return (
        riccati_map(A, C, Sigma, phi.P),
        (A + Sigma @ phi.P).T @ phi.S,
        sym(phi.S.T @ Sigma @ phi.S),
    )


def dual_coefficients(problem, phi, t):
    """Coefficients of the Riccati equation satisfied by the dual of ``p(t)``.

    Writing ``Fp = A'P + PA + C + P Sigma P``, ``Fs = (A + Sigma P)'S`` and
    ``Fq = S' Sigma S`` for the right-hand sides evaluated at ``phi``::

        A_bar     = S^-1 (Fp S^-T Q - Fs)
        Sigma_bar = S^-1 Fp S^-T
        C_bar     = Q S^-1 Fp S^-T Q - Q S^-1 Fs - (Q S^-1 Fs)' + Fq

    For ``phi = (0, I, 0)`` this gives ``(-A', Sigma, C)`` for
    ``(A_bar, C_bar, Sigma_bar)``, the familiar dual of ``q = -p^-1``.

    Raises
    ------
    SingularMatrixError
        If ``S`` is singular.
    """
    A, C, Sigma = problem.coefficients(t)
    Fp, Fs, Fq = _flow_values(A, C, Sigma, phi)
    Sinv = checked_inverse(phi.S, SingularMatrixError, "S")
    Q = phi.Q
    W = Sinv @ Fp @ Sinv.T
    QSFs = Q @ Sinv @ Fs
    A_bar = W @ Q - Sinv @ Fs
    Sigma_bar = sym(W)
    C_bar = sym(Q @ W @ Q - QSFs - QSFs.T + Fq)
    return DualDreCoefficients(A_bar, C_bar, Sigma_bar)


def dual_hamiltonian(dual):
    """``[[A_bar, Sigma_bar], [-C_bar, -A_bar']]``."""
    return np.block([[dual.A_bar, dual.Sigma_bar], [-dual.C_bar, -dual.A_bar.T]])


def matching_residual(problem, dual, phi, t):
    """Largest normalized residual of the three kernel matching conditions.

    ::

        Fp - S Sigma_bar S'
        (A + Sigma P)'S - S(-A_bar + Sigma_bar Q)
        S' Sigma S - (-A_bar'Q - Q A_bar + C_bar + Q Sigma_bar Q)

    Each Frobenius norm is divided by ``1 +`` the norm of its first operand.
    """
    A, C, Sigma = problem.coefficients(t)
    Fp, Fs, Fq = _flow_values(A, C, Sigma, phi)
    S, Q = phi.S, phi.Q
    Ab, Cb, Sb = dual.A_bar, dual.C_bar, dual.Sigma_bar
    pairs = [
        (Fp, S @ Sb @ S.T),
        (Fs, S @ (-Ab + Sb @ Q)),
        (Fq, -Ab.T @ Q - Q @ Ab + Cb + Q @ Sb @ Q),
    ]
    return max(np.linalg.norm(x - y) / (1.0 + np.linalg.norm(x)) for x, y in pairs)


def k_matrix(phi, tol=1e-10):
    """Similarity ``K`` with ``K H = H_bar K`` and its closed-form inverse.

    ::

        K     = [[S^-1 P,          -S^-1   ],
                 [S' - Q S^-1 P,    Q S^-1 ]]
        K^-1  = [[S^-T Q,           S^-T   ],
                 [-S + P S^-T Q,    P S^-T ]]

    Raises
    ------
    SingularMatrixError
        If ``S`` is singular.
    ConditioningError
        If ``K K^-1`` departs from the identity by more than `tol` relative to
        ``||K|| ||K^-1||``.
    """
    P, S, Q = phi.P, phi.S, phi.Q
    n = P.shape[0]
    Si = checked_inverse(S, SingularMatrixError, "S")
    SiT = Si.T
    K = np.block([[Si @ P, -Si], [S.T - Q @ Si @ P, Q @ Si]])
    K_inv = np.block([[SiT @ Q, SiT], [-S + P @ SiT @ Q, P @ SiT]])
    err = np.linalg.norm(K @ K_inv - np.eye(2 * n))
    if err > tol * max(1.0, np.linalg.norm(K) * np.linalg.norm(K_inv)):
        raise ConditioningError(f"K K^-1 differs from I by {err:.2e}")
    return SymplecticK(K, K_inv)


def similarity_residual(k, H, H_bar):
    """``||K H - H_bar K||_F / (1 + ||H||_F)``."""
    H = np.asarray(H, dtype=float)
    H_bar = np.asarray(H_bar, dtype=float)
    if not H.shape == H_bar.shape == k.K.shape:
        raise DimensionError("K, H and H_bar must share one shape")
    return float(np.linalg.norm(k.K @ H - H_bar @ k.K) / (1.0 + np.linalg.norm(H)))


def dual_kernel_B(phi1, phi2, strict=True):
    """Dual propagation kernel from the (P, S, Q) flow at ``t1`` and ``t2``.

    With ``E = (P1 - P2)^-1``::

        B11 = -S2' E S2 - Q2
        B12 = S2' E S1
        B22 = -S1' E S1 + Q1

    Parameters
    ----------
    phi1, phi2 : BivariateQuadratic
        Flow values at ``t1 < t2``.
    strict : bool
        Require ``P1 - P2`` positive definite (the flow's ``P`` strictly
        decreasing in time).  Otherwise only invertibility is needed.

    Raises
    ------
    AssumptionError
        If ``P1 - P2`` fails the check.
    """
    R = phi1.P - phi2.P
    if strict and not is_positive_definite(R):
        raise AssumptionError("P(t1) - P(t2) is not positive definite")
    E = checked_inverse(R, AssumptionError, "P(t1) - P(t2)")
    return DualKernelB(
        -phi2.S.T @ E @ phi2.S - phi2.Q,
        phi2.S.T @ E @ phi1.S,
        -phi1.S.T @ E @ phi1.S + phi1.Q,
        phi1.t,
        phi2.t,
    )


def dual_kernel_compose(ab, bc, strict=True):
    """Compose dual kernels on adjacent intervals; same algebra as the primal kernel."""
    if abs(ab.t2 - bc.t1) > TIME_TOL:
        raise IntervalError(f"kernels do not meet: {ab.t2} vs {bc.t1}")
    blocks = schur_compose(ab.B11, ab.B12, ab.B22, bc.B11, bc.B12, bc.B22, strict, "dual kernel")
    return DualKernelB(*blocks, ab.t1, bc.t2)


def dual_kernel_propagate(B, q_t2, strict=True):
    """``q(t1) = B11 - B12 (B22 + q)^-1 B12'``.

    Issues ``SingularityCrossingWarning`` under `strict` when ``B22 + q`` is
    not negative definite.

    Raises
    ------
    EscapeError
        If ``B22 + q`` is singular.
    """
    q = as_symmetric(q_t2, "q_t2")
    inner = B.B22 + q
    if strict and not is_negative_definite(inner):
        warnings.warn(
            "B22 + q is not negative definite; returning the continuation",
            SingularityCrossingWarning,
            stacklevel=2,
        )
    inv = checked_inverse(inner, EscapeError, "B22 + q")
    return sym(B.B11 - B.B12 @ inv @ B.B12.T)


def stationary_dual(p_hat, phi0, strict=True):
    """Dual ``q_hat`` of a stationary solution ``p_hat``; the same map as :func:`dual_value`."""
    return dual_value(p_hat, phi0, strict)
