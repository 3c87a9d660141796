"""Benchmark drivers: a stiff family with a closed-form solution, doubling sweeps,
a high-accuracy reference integrator and a singularity-crossing demo.
"""

import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .dre_core import BivariateQuadratic, riccati_map
from .errors import DreError, EscapeError, StiffnessError
from .matrix_core import as_symmetric, rel_error, sym
from .maxplus_kernel import MaxPlusKernel, kernel_compose, kernel_from_bivariate, kernel_propagate
from .semiconvex import DualityKernel
from .time_invariant import (
    DoublingSchedule,
    TiProblem,
    flop_model,
    method_a_solve,
    method_b_solve,
    method_c_solve,
    seed_psq,
)

__all__ = [
    "StiffBenchSpec",
    "BenchRecord",
    "CSV_COLUMNS",
    "choi_laub_problem",
    "choi_laub_analytic",
    "run_stiff_bench",
    "run_doubling_sweep",
    "truth_solve",
    "TanSample",
    "tan_demo",
    "solve_with",
]

CSV_COLUMNS = (
    "method", "n", "k", "t1", "t2", "M", "N", "Nrk",
    "h", "stability_h", "err", "flops_model", "runtime_ns", "warnings",
)


@dataclass(frozen=True)
class StiffBenchSpec:
    """One configuration of the stiff benchmark family."""

    n: int
    k: float
    t1: float
    t2: float
    M: int
    N: int
    Nrk: int
    seed: int = 0
    method: str = "A"

    def __post_init__(self):
        if self.n < 1 or not self.k > 0:
            raise ValueError("need n >= 1 and k > 0")
        if not 0 <= self.t1 < self.t2:
            raise ValueError("need 0 <= t1 < t2")
        if str(self.method).upper() not in ("A", "B", "C"):
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "method", str(self.method).upper())
        DoublingSchedule.for_horizon(self.t2 - self.t1, self.M, self.N, self.Nrk)


@dataclass
class BenchRecord:
    """Outcome of one benchmark run.  ``err`` is NaN when the run failed."""

    method: str
    n: int
    k: float
    t1: float
    t2: float
    M: int
    N: int
    Nrk: int
    h: float
    stability_h: float
    err: float
    flops_model: Fraction
    runtime_ns: int
    warnings: list = field(default_factory=list)

    def as_row(self):
        """CSV cells in ``CSV_COLUMNS`` order."""
        d = asdict(self)
        out = []
        for col in CSV_COLUMNS:
            v = d[col]
            if isinstance(v, float):
                out.append("" if math.isnan(v) else repr(v))
            elif col == "warnings":
                out.append(";".join(v))
            else:
                out.append(str(v))
        return out


def choi_laub_problem(n, k, seed=0):
    """Stiff family ``-dp/dt = -p^2 + k^2 I`` and its random orthogonal basis.

    In the standard form this is ``A = 0``, ``C = k^2 I``, ``Sigma = -I``;
    ``Sigma`` is negative, so the problem is flagged ``relax_psd``.

    Returns
    -------
    problem : TiProblem
    U : ndarray
        Q factor of a seeded standard normal matrix, columns signed so the
        diagonal of ``U`` is nonnegative.  Column signs cancel in
        ``U diag(v) U'``, so this only fixes a canonical representative.
    """
    if n < 1 or not k > 0:
        raise ValueError("need n >= 1 and k > 0")
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    U = Q * np.where(np.diag(Q) < 0, -1.0, 1.0)
    eye = np.eye(n)
    problem = TiProblem(
        np.zeros((n, n)), k**2 * eye, -eye, relax_psd=True, descriptor=f"choi-laub n={n} k={k}"
    )
    return problem, U


def choi_laub_analytic(n, k, U, t):
    """Closed-form solution ``U diag(v_i) U'`` of the stiff family after time `t`.

    ``v_i = (k sinh kt + i cosh kt) / (cosh kt + (i/k) sinh kt)``, evaluated
    after dividing through by ``e^{kt}`` so large ``kt`` does not overflow.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    i = np.arange(1, n + 1, dtype=float)
    e = math.exp(-2.0 * k * t)
    v = (k * (1 - e) + i * (1 + e)) / ((1 + e) + (i / k) * (1 - e))
    U = np.asarray(U, dtype=float)
    return sym((U * v) @ U.T)


def _run_method(method, problem, p0, sched, phi0, strict):
    key = method.upper()
    if key == "A":
        return method_a_solve(problem, p0, sched, phi0, strict=strict)
    if key == "B":
        return method_b_solve(problem, p0, sched, phi0, strict=strict)
    return method_c_solve(problem, p0, sched, phi0)


def _timed(fn):
    """Run `fn`, capturing warnings and library errors."""
    msgs = []
    result = None
    start = time.perf_counter_ns()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = fn()
        except (DreError, np.linalg.LinAlgError, ArithmeticError) as exc:
            msgs.append(f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter_ns() - start
    seen = []
    for w in caught:
        text = f"{w.category.__name__}: {w.message}"
        if text not in seen:
            seen.append(text)
    return result, seen + msgs, elapsed


def run_stiff_bench(spec):
    """Run one stiff-family configuration against its closed-form solution.

    The run starts from the exact solution at ``t1`` and propagates over
    ``t2 - t1``.  Failures give ``err = NaN`` with the reason in ``warnings``.
    """
    problem, U = choi_laub_problem(spec.n, spec.k, spec.seed)
    T = spec.t2 - spec.t1
    sched = DoublingSchedule.for_horizon(T, spec.M, spec.N, spec.Nrk)
    p_start = choi_laub_analytic(spec.n, spec.k, U, spec.t1)
    result, msgs, elapsed = _timed(
        lambda: _run_method(spec.method, problem, p_start, sched, None, strict=False)
    )
    err = float("nan")
    if result is not None:
        truth = choi_laub_analytic(spec.n, spec.k, U, spec.t2)
        err = rel_error(truth, result) if np.all(np.isfinite(result)) else float("nan")
    return BenchRecord(
        spec.method, spec.n, float(spec.k), float(spec.t1), float(spec.t2),
        spec.M, spec.N, spec.Nrk, T / spec.N, 2.0 / spec.k, err,
        flop_model(spec.method, spec.n, spec.M, spec.N, spec.Nrk), elapsed, msgs,
    )


def run_doubling_sweep(problem, p0, phi0, T, M_range, truth, methods=("A", "B", "C"), Nrk=1):
    """Errors of every method for each doubling count in `M_range`, with ``N = 1``.

    Each ``(M, method)`` cell runs in isolation, so one failure does not abort
    the sweep.  Records are ordered by ``M`` and then method.  Sign conditions
    are not enforced, since benchmark problems may violate them while the
    algebra stays valid.
    """
    p0 = as_symmetric(p0, "p0")
    phi0 = DualityKernel.identity(problem.n) if phi0 is None else DualityKernel.of(phi0)
    n = problem.n
    records = []
    for M in M_range:
        sched = DoublingSchedule.for_horizon(T, M, 1, Nrk)
        for method in methods:
            result, msgs, elapsed = _timed(
                lambda: _run_method(method, problem, p0, sched, phi0, strict=False)
            )
            err = float("nan")
            if result is not None and np.all(np.isfinite(result)):
                err = rel_error(truth, result)
            records.append(BenchRecord(
                method, n, float("nan"), 0.0, float(T), M, 1, Nrk, float(T),
                float("nan"), err, flop_model(method, n, M, 1, Nrk), elapsed, msgs,
            ))
    return records


def truth_solve(problem, p0, T, abs_tol=1e-15, rel_tol=1e-13):
    """Reference solution at ``-T`` by adaptive Dormand-Prince 5(4).

    Raises
    ------
    StiffnessError
        If the integrator cannot complete the horizon.
    """
    if not (0 < abs_tol <= 1e-6 and 0 < rel_tol <= 1e-6):
        raise ValueError("tolerances must lie in (0, 1e-6]")
    p0 = as_symmetric(p0, "p0")
    n = p0.shape[0]
    A, C, Sigma = problem.coefficients(0.0)
    if T == 0:
        return p0

    def rhs(tau, y):
        return riccati_map(A, C, Sigma, y.reshape(n, n)).ravel()

    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(rhs, (0.0, T), p0.ravel(), method="RK45", atol=abs_tol, rtol=rel_tol)
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise StiffnessError(f"reference integration failed: {sol.message}")
    return sym(sol.y[:, -1].reshape(n, n))


class TanSample(NamedTuple):
    t: float
    p_computed: float
    p_true: float


def tan_demo(T, steps, pole_margin=0.05):
    """Propagate ``dp/dt = 1 + p^2`` from ``p(0) = 0`` across its poles.

    A single kernel over ``h = T / steps`` is applied repeatedly; the
    continuation beyond each pole of ``tan`` is exact algebra.  Samples
    closer than `pole_margin` to a pole are dropped, and a step that lands on
    a pole is bridged with the kernel over ``2h``.

    Returns
    -------
    list of TanSample
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    problem = TiProblem([[0.0]], [[1.0]], [[1.0]], descriptor="tan")
    h = T / steps
    seed = BivariateQuadratic.identity_seed(1)
    a = seed_psq(problem, h, 0, seed)
    k1 = kernel_from_bivariate(a, seed, strict=False)
    k2 = kernel_compose(k1, _shifted(k1, h), strict=False) if steps > 1 else None

    samples = []
    p = np.zeros((1, 1))
    j = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        while j < steps:
            try:
                p = kernel_propagate(k1, p, strict=False)
                j += 1
            except EscapeError:
                # the grid lands on a pole; jump over it
                if k2 is None or j + 2 > steps:
                    break
                p = kernel_propagate(k2, p, strict=False)
                j += 2
            t = j * h
            if abs(math.remainder(t - math.pi / 2, math.pi)) > pole_margin:
                samples.append(TanSample(t, float(p[0, 0]), math.tan(t)))
    return samples


def _shifted(k, dt):
    return MaxPlusKernel(k.I11, k.I12, k.I22, k.t1 + dt, k.t2 + dt)


def solve_with(method, problem, p0, T, M=0, N=1, nrk=1, phi0=None, steps=1000, strict=None):
    """Solve to ``-T`` with a named method; used by the command line.

    `strict` enables the sign checks of the doubling methods and defaults to
    ``not problem.relax_psd``.
    """
    from .dre_core import davison_maki, rk4_dre
    from .time_invariant import leipnik_solve, rusnak_solve

    method = method.lower()
    if strict is None:
        strict = not problem.relax_psd
    if method == "rk":
        return rk4_dre(problem, p0, -T, 0.0, steps)
    if method == "dm":
        return davison_maki(problem, p0, -T, 0.0)
    if method == "leipnik":
        return leipnik_solve(problem, p0, T)
    if method == "rusnak":
        return rusnak_solve(problem, p0, T)
    if method in ("a", "b", "c"):
        sched = DoublingSchedule.for_horizon(T, M, N, nrk)
        return _run_method(method, problem, p0, sched, phi0, strict)
    raise ValueError(f"unknown method {method!r}")
