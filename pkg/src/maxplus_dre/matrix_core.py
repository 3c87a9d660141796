"""Dense real matrix primitives.

Everything here is a pure function of ``numpy`` arrays.  Functions that
return a mathematically symmetric matrix symmetrize it as ``(M + M') / 2``
so roundoff does not accumulate across long doubling chains.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import (
    DimensionError,
    ExtractionError,
    MatrixOverflowError,
    NearSingularWarning,
    NoDichotomyError,
    NonUniqueError,
    SingularMatrixError,
    SymmetryError,
)

SYM_TOL = 1e-12
COND_WARN_TOL = 1e-13
RANK_TOL = 1e-12
DEFINITE_SHIFT = 1e-12

__all__ = [
    "CondReport",
    "as_matrix",
    "as_square",
    "as_symmetric",
    "sym",
    "is_positive_definite",
    "is_negative_definite",
    "mat_exp",
    "van_loan_integral",
    "care_extremal_solutions",
    "lyapunov_solve",
    "inverse",
    "checked_inverse",
    "pseudo_inverse",
    "rel_error",
]


@dataclass(frozen=True)
class CondReport:
    """An inverse together with its reciprocal condition estimate.

    Attributes
    ----------
    value : ndarray
        The computed inverse.
    rcond_estimate : float
        LAPACK estimate of ``1 / (||M||_1 ||M^-1||_1)``, in ``[0, 1]``.
    warned : bool
        True when ``rcond_estimate`` fell below the warning threshold.
    """

    value: np.ndarray
    rcond_estimate: float
    warned: bool


def as_matrix(M, name="matrix"):
    """Return `M` as a 2-D float array with finite entries."""
    M = np.array(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_square(M, name="matrix"):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def sym(M):
    """Symmetric part ``(M + M') / 2``."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def as_symmetric(M, name="matrix", sym_tol=SYM_TOL):
    """Validate that `M` is symmetric to `sym_tol` and return its symmetric part.

    Raises
    ------
    SymmetryError
        If ``||M - M'||_F > sym_tol * (1 + ||M||_F)``.
    """
    M = as_square(M, name)
    skew = np.linalg.norm(M - M.T)
    if skew > sym_tol * (1.0 + np.linalg.norm(M)):
        raise SymmetryError(f"{name} is not symmetric (||M - M'||_F = {skew:.3e})")
    return sym(M)


def _definite(M, sign, shift):
    M = sign * sym(M)
    n = M.shape[0]
    margin = shift * abs(np.trace(M))
    try:
        np.linalg.cholesky(M - margin * np.eye(n))
    except np.linalg.LinAlgError:
        return False
    return True


def is_positive_definite(M, shift=DEFINITE_SHIFT):
    """Cholesky test of ``M - shift*|tr M|*I``."""
    return _definite(M, 1.0, shift)


def is_negative_definite(M, shift=DEFINITE_SHIFT):
    """Cholesky test of ``-M - shift*|tr M|*I``."""
    return _definite(M, -1.0, shift)


def mat_exp(M):
    """Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

    Parameters
    ----------
    M : array_like, shape (n, n)

    Returns
    -------
    ndarray, shape (n, n)

    Raises
    ------
    DimensionError
        If `M` is not square.
    MatrixOverflowError
        If the result is not representable in double precision.
    """
    M = as_square(M)
    with np.errstate(over="ignore", invalid="ignore"):
        E = sla.expm(M)
    if not np.all(np.isfinite(E)):
        raise MatrixOverflowError(
            f"matrix exponential overflowed (||M||_1 = {np.linalg.norm(M, 1):.3e})"
        )
    return E


def van_loan_integral(B, W, t):
    r"""Evaluate :math:`\int_0^t e^{\tau B'} W e^{\tau B}\,d\tau`.

    Uses the block exponential ``expm([[-B', W], [0, B]] t) = [[F1, F2], [0, F3]]``,
    for which the integral equals ``F3' F2``.

    Parameters
    ----------
    B : array_like, shape (n, n)
    W : array_like, shape (n, n)
        Symmetric weight.
    t : float
        Nonnegative horizon.

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric integral.
    """
    B = as_square(B, "B")
    W = as_symmetric(W, "W")
    n = B.shape[0]
    if W.shape != B.shape:
        raise DimensionError(f"B is {B.shape} but W is {W.shape}")
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"t must be finite and nonnegative, got {t}")
    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = -B.T
    blk[:n, n:] = W
    blk[n:, n:] = B
    F = mat_exp(blk * t)
    return sym(F[n:, n:].T @ F[:n, n:])


def care_extremal_solutions(A, C, Sigma, imag_tol=1e-10):
    """Stabilizing and anti-stabilizing solutions of ``A'P + PA + C + P Sigma P = 0``.

    The Hamiltonian ``H = [[A, Sigma], [-C, -A']]`` is reduced to ordered real
    Schur form.  The invariant subspace ``[X1; X2]`` for the open left
    half-plane gives ``P_minus = X2 X1^-1`` (``A + Sigma P_minus`` Hurwitz);
    the right half-plane gives ``P_plus``.

    When ``Sigma`` is zero the equation is a Lyapunov equation with a single
    solution, which is returned for both.

    Parameters
    ----------
    A, C, Sigma : array_like, shape (n, n)
    imag_tol : float
        Eigenvalues with ``|Re| <= imag_tol * (1 + ||H||_1)`` count as imaginary.

    Returns
    -------
    P_minus, P_plus : ndarray

    Raises
    ------
    NoDichotomyError
        If ``H`` has eigenvalues on or near the imaginary axis.
    ExtractionError
        If ``X1`` is singular for one of the subspaces.
    """
    A = as_square(A, "A")
    C = as_symmetric(C, "C")
    Sigma = as_symmetric(Sigma, "Sigma")
    n = A.shape[0]
    if C.shape != A.shape or Sigma.shape != A.shape:
        raise DimensionError("A, C and Sigma must share one shape")
    if not np.any(Sigma):
        X = lyapunov_solve(A, C)
        return X, X.copy()

    H = np.block([[A, Sigma], [-C, -A.T]])
    scale = 1.0 + np.linalg.norm(H, 1)
    eigs = np.linalg.eigvals(H)
    if np.min(np.abs(eigs.real)) <= imag_tol * scale:
        raise NoDichotomyError("Hamiltonian has eigenvalues on the imaginary axis")

    out = []
    for region in ("lhp", "rhp"):
        _, Z, sdim = sla.schur(H, output="real", sort=region)
        if sdim != n:
            raise NoDichotomyError(f"{region} invariant subspace has dimension {sdim}, expected {n}")
        X1, X2 = Z[:n, :n], Z[n:, :n]
        try:
            rep = inverse(X1)
        except SingularMatrixError as exc:
            raise ExtractionError("subspace basis is singular") from exc
        if rep.warned:
            raise ExtractionError(
                f"subspace basis is ill conditioned (rcond = {rep.rcond_estimate:.2e})"
            )
        out.append(sym(X2 @ rep.value))
    return out[0], out[1]


def lyapunov_solve(A, C, resonance_tol=1e-10):
    """Solve ``A'X + XA + C = 0``.

    Parameters
    ----------
    A : array_like, shape (n, n)
    C : array_like, shape (n, n)
        Symmetric right-hand side.

    Returns
    -------
    ndarray
        Symmetric solution.

    Raises
    ------
    NonUniqueError
        If some pair of eigenvalues of `A` sums to (numerically) zero.
    """
    A = as_square(A, "A")
    C = as_symmetric(C, "C")
    if C.shape != A.shape:
        raise DimensionError(f"A is {A.shape} but C is {C.shape}")
    lam = np.linalg.eigvals(A)
    gap = np.min(np.abs(lam[:, None] + lam[None, :]))
    if gap <= resonance_tol * max(1.0, np.max(np.abs(lam))):
        raise NonUniqueError(f"A and -A' share an eigenvalue (gap {gap:.2e})")
    return sym(sla.solve_continuous_lyapunov(A.T, -C))


def inverse(M, cond_warn_tol=COND_WARN_TOL):
    """LU inverse with a reciprocal condition estimate.

    Near-singular matrices still produce an inverse; the report is flagged
    instead so that callers can step over singular points deliberately.

    Parameters
    ----------
    M : array_like, shape (n, n)
    cond_warn_tol : float
        Threshold below which ``warned`` is set.

    Returns
    -------
    CondReport

    Raises
    ------
    SingularMatrixError
        If a pivot is zero at machine precision.
    """
    M = as_square(M)
    n = M.shape[0]
    anorm = np.linalg.norm(M, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if anorm == 0.0 or np.min(pivots) <= n * np.finfo(float).eps * anorm:
        raise SingularMatrixError("matrix is singular to working precision")
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0:
        raise SingularMatrixError(f"dgecon failed with info={info}")
    inv = sla.lu_solve((lu, piv), np.eye(n), check_finite=False)
    if not np.all(np.isfinite(inv)):
        raise SingularMatrixError("inverse has non-finite entries")
    rcond = float(min(max(rcond, 0.0), 1.0))
    return CondReport(inv, rcond, rcond < cond_warn_tol)


def checked_inverse(M, error=SingularMatrixError, what="matrix", cond_warn_tol=COND_WARN_TOL):
    """Inverse that re-raises singularity as `error` and warns when ill conditioned."""
    try:
        rep = inverse(M, cond_warn_tol)
    except SingularMatrixError as exc:
        raise error(f"{what} is singular") from exc
    if rep.warned:
        warnings.warn(
            f"{what} is nearly singular (rcond = {rep.rcond_estimate:.2e})",
            NearSingularWarning,
            stacklevel=3,
        )
    return rep.value


def pseudo_inverse(M, rank_tol=RANK_TOL):
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Symmetric input.
    rank_tol : float
        Eigenvalues with ``|lam| <= rank_tol * max|lam|`` are discarded.

    Returns
    -------
    Mplus : ndarray, shape (n, n)
    range_basis : ndarray, shape (n, r)
        Orthonormal eigenvectors spanning the range of `M`.
    rank : int
    """
    M = as_symmetric(M, "M")
    n = M.shape[0]
    lam, U = np.linalg.eigh(M)
    top = np.max(np.abs(lam))
    if top == 0.0:
        return np.zeros((n, n)), np.zeros((n, 0)), 0
    keep = np.abs(lam) > rank_tol * top
    U1 = U[:, keep]
    Mplus = (U1 / lam[keep]) @ U1.T
    return sym(Mplus), U1, int(keep.sum())


def rel_error(p_true, p_computed):
    """Relative Frobenius error ``||p_true - p_computed||_F / ||p_true||_F``."""
    p_true = np.asarray(p_true, dtype=float)
    p_computed = np.asarray(p_computed, dtype=float)
    if p_true.shape != p_computed.shape:
        raise DimensionError(f"shape mismatch {p_true.shape} vs {p_computed.shape}")
    ref = np.linalg.norm(p_true)
    if ref == 0.0:
        raise ZeroDivisionError("reference matrix has zero norm")
    return float(np.linalg.norm(p_true - p_computed) / ref)
