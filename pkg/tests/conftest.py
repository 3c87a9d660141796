import numpy as np
import pytest

from maxplus_dre.dre_core import DreProblem
from maxplus_dre.semiconvex import DualityKernel
from maxplus_dre.time_invariant import TiProblem

BENCH_A = np.array([[-2.0, 1.6], [-1.6, -0.4]])
BENCH_C = np.array([[1.5, 0.2], [0.2, -0.4]])
BENCH_SIGMA = np.array([[0.216, -0.008], [-0.008, 0.216]])
BENCH_D = np.array([[-1.0, -0.2], [-0.2, -0.1]])
BENCH_P0 = -0.1 * np.eye(2)

# acceptance outcomes, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def bench2():
    return TiProblem(BENCH_A, BENCH_C, BENCH_SIGMA, descriptor="2x2 benchmark")


@pytest.fixture
def bench_phi0():
    return DualityKernel(BENCH_D, -BENCH_D, BENCH_D)


@pytest.fixture
def tan_problem():
    return TiProblem([[0.0]], [[1.0]], [[1.0]])


@pytest.fixture
def tanh_problem():
    return TiProblem([[0.0]], [[-1.0]], [[1.0]])


def random_problem(rng, n, scale=0.5):
    """Time-invariant problem with Sigma > 0, so the pair is controllable."""
    A = scale * rng.standard_normal((n, n))
    B = rng.standard_normal((n, n))
    Sigma = 0.2 * (B @ B.T) / n + 0.1 * np.eye(n)
    Y = rng.standard_normal((n, n))
    C = 0.25 * (Y + Y.T)
    return TiProblem(A, C, Sigma)


def varying_problem(n=2):
    """A smooth time-varying problem."""
    rng = np.random.default_rng(7)
    A0, A1 = 0.5 * rng.standard_normal((n, n)), 0.3 * rng.standard_normal((n, n))
    Y = rng.standard_normal((n, n))
    C0 = 0.2 * (Y + Y.T)
    B = rng.standard_normal((n, n))
    S0 = 0.2 * B @ B.T + 0.2 * np.eye(n)

    def coeffs(t):
        return A0 + np.sin(t) * A1, C0 * (1 + 0.5 * np.cos(t)), S0 * (1 + 0.2 * np.sin(2 * t))

    return DreProblem(n, coeffs, time_invariant=False, descriptor="varying")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
