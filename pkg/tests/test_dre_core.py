import numpy as np
import pytest

from conftest import random_problem, varying_problem
from maxplus_dre.dre_core import (
    BivariateQuadratic,
    DreProblem,
    HamiltonianTransition,
    bivariate_rhs,
    davison_maki,
    hamiltonian_at,
    psq_from_transition,
    rk4_bivariate,
    rk4_dre,
    transition,
)
from maxplus_dre.errors import BlowupError, EscapeError, IntervalError
from maxplus_dre.matrix_core import care_extremal_solutions, mat_exp, rel_error

Q4 = np.pi / 4
SEED1 = BivariateQuadratic.identity_seed(1)


def J(n):
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])


class TestProblem:
    def test_psd_gate(self):
        with pytest.raises(ValueError):
            DreProblem.constant([[0.0]], [[1.0]], [[-1.0]]).coefficients(0.0)
        relaxed = DreProblem.constant([[0.0]], [[1.0]], [[-1.0]], relax_psd=True)
        assert relaxed.coefficients(0.0)[2][0, 0] == -1.0


class TestBivariateRhs:
    def test_tan_seed(self, tan_problem):
        dP, dS, dQ = bivariate_rhs(tan_problem, 0.0, SEED1)
        assert (dP[0, 0], dS[0, 0], dQ[0, 0]) == (-1.0, 0.0, -1.0)

    def test_zero_sigma(self):
        pr = DreProblem.constant(np.eye(2), np.eye(2), np.zeros((2, 2)))
        psq = BivariateQuadratic(np.eye(2), [[1.0, 2.0], [3.0, 4.0]], np.eye(2))
        assert not np.any(bivariate_rhs(pr, 0.0, psq)[2])

    def test_zero_problem(self):
        pr = DreProblem.constant(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))
        psq = BivariateQuadratic(np.eye(2), np.eye(2), np.eye(2))
        assert all(not np.any(d) for d in bivariate_rhs(pr, 0.0, psq))


class TestRk4Bivariate:
    def test_tan(self, tan_problem):
        out = rk4_bivariate(tan_problem, SEED1, -Q4, 100)
        np.testing.assert_allclose([out.P[0, 0], out.S[0, 0], out.Q[0, 0]], [1, np.sqrt(2), 1], atol=1e-8)
        assert out.t == -Q4

    def test_zero_width(self, tan_problem):
        assert rk4_bivariate(tan_problem, SEED1, 0.0, 7) is SEED1

    def test_linear_s(self):
        pr = DreProblem.constant([[1.0]], [[0.0]], [[0.0]])
        out = rk4_bivariate(pr, BivariateQuadratic([[0.0]], [[2.0]], [[0.0]]), -1.0, 200)
        assert out.S[0, 0] == pytest.approx(2 * np.e, rel=1e-10)

    def test_blowup(self, tan_problem):
        with pytest.raises(BlowupError) as info:
            rk4_bivariate(tan_problem, BivariateQuadratic([[1e300]], [[1.0]], [[0.0]]), -1.0, 10)
        assert info.value.time is not None

    def test_reversed(self, tan_problem):
        with pytest.raises(IntervalError):
            rk4_bivariate(tan_problem, SEED1, 1.0, 10)

    @pytest.mark.parametrize("seed", range(5))
    def test_q_monotone_and_det_sign(self, seed):
        rng = np.random.default_rng(seed)
        pr = random_problem(rng, 3)
        start = BivariateQuadratic(np.zeros((3, 3)), rng.standard_normal((3, 3)), np.zeros((3, 3)))
        out, path = rk4_bivariate(pr, start, -0.5, 50, return_path=True)
        assert len(path) == 51
        for prev, nxt in zip(path, path[1:]):
            lo = np.linalg.eigvalsh(nxt.Q - prev.Q)[0]
            assert lo >= -1e-10 * max(1.0, np.linalg.norm(nxt.Q))
        assert np.sign(np.linalg.det(out.S)) == np.sign(np.linalg.det(start.S))

    def test_endpoint_identity(self, bench2):
        b = BivariateQuadratic(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)))
        a = rk4_bivariate(bench2, b, -0.7, 200)
        rng = np.random.default_rng(0)
        x, z = rng.standard_normal(2), rng.standard_normal(2)
        S2inv = np.linalg.inv(b.S)
        lhs = b.S.T @ S2inv.T @ (a.S.T @ x + (a.Q - b.Q) @ z) + b.Q @ z
        rhs = a.S.T @ x + a.Q @ z
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


class TestRk4Dre:
    def test_tan(self, tan_problem):
        assert rk4_dre(tan_problem, [[0.0]], -Q4, 0.0, 200)[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_linear_flow(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((3, 3))
        Y = rng.standard_normal((3, 3))
        p0 = Y + Y.T
        pr = DreProblem.constant(A, np.zeros((3, 3)), np.zeros((3, 3)))
        E = mat_exp(0.4 * A)
        np.testing.assert_allclose(rk4_dre(pr, p0, -0.4, 0.0, 400), E.T @ p0 @ E, rtol=1e-9)

    def test_stationary(self, bench2):
        Pm, _ = care_extremal_solutions(bench2.A, bench2.C, bench2.Sigma)
        np.testing.assert_allclose(rk4_dre(bench2, Pm, -3.0, 0.0, 300), Pm, atol=1e-10)


class TestHamiltonian:
    def test_tan(self, tan_problem):
        np.testing.assert_array_equal(hamiltonian_at(tan_problem, 0.0), [[0, 1], [-1, 0]])

    def test_zero(self):
        pr = DreProblem.constant(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))
        np.testing.assert_array_equal(hamiltonian_at(pr, 0.0), np.zeros((4, 4)))

    def test_benchmark(self, bench2):
        H = hamiltonian_at(bench2, 0.0)
        np.testing.assert_array_equal(H[:2, :2], bench2.A)
        np.testing.assert_array_equal(H[:2, 2:], bench2.Sigma)
        np.testing.assert_array_equal(H[2:, :2], -bench2.C)
        np.testing.assert_array_equal(H[2:, 2:], -bench2.A.T)


class TestTransition:
    def test_rotation(self, tan_problem):
        phi = transition(tan_problem, -Q4, 0.0)
        c = s = np.sqrt(0.5)
        np.testing.assert_allclose(phi.matrix, [[c, -s], [s, c]], atol=1e-15)

    def test_zero_width(self, bench2):
        np.testing.assert_allclose(transition(bench2, 1.0, 1.0).matrix, np.eye(4))
        np.testing.assert_allclose(transition(varying_problem(), 1.0, 1.0).matrix, np.eye(4))

    def test_symplectic(self, bench2):
        Phi = transition(bench2, -0.5, 0.0).matrix
        np.testing.assert_allclose(Phi.T @ J(2) @ Phi, J(2), atol=1e-9)

    def test_symplectic_varying(self):
        Phi = transition(varying_problem(), -0.8, 0.3, 200).matrix
        np.testing.assert_allclose(Phi.T @ J(2) @ Phi, J(2), atol=1e-9)


class TestPsqFromTransition:
    def test_identity(self):
        phi = HamiltonianTransition.from_matrix(np.eye(4), 0.0, 0.0)
        term = BivariateQuadratic(np.eye(2), [[1.0, 2.0], [0.0, 1.0]], np.eye(2))
        out = psq_from_transition(phi, term)
        for x, y in ((out.P, term.P), (out.S, term.S), (out.Q, term.Q)):
            np.testing.assert_array_equal(x, y)

    def test_tan(self, tan_problem):
        out = psq_from_transition(transition(tan_problem, -Q4, 0.0), SEED1)
        np.testing.assert_allclose([out.P[0, 0], out.S[0, 0], out.Q[0, 0]], [1, np.sqrt(2), 1], atol=1e-10)

    def test_matches_rk(self, bench2):
        term = BivariateQuadratic(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)))
        a = psq_from_transition(transition(bench2, -1.0, 0.0), term)
        b = rk4_bivariate(bench2, term, -1.0, 10_000)
        for x, y in ((a.P, b.P), (a.S, b.S), (a.Q, b.Q)):
            assert rel_error(y, x) < 1e-8

    def test_escape(self, tan_problem):
        with pytest.raises(EscapeError):
            psq_from_transition(transition(tan_problem, -np.pi / 2, 0.0), SEED1)

    def test_rk4_convergence_order(self):
        pr = varying_problem()
        term = BivariateQuadratic(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)), 0.5)
        ref = psq_from_transition(transition(pr, -0.5, 0.5, 4000), term)
        errs = []
        for steps in (10, 20):
            a = rk4_bivariate(pr, term, -0.5, steps)
            errs.append(np.linalg.norm(a.P - ref.P) + np.linalg.norm(a.Q - ref.Q))
        assert 10 < errs[0] / errs[1] < 22


class TestDavisonMaki:
    def test_zero_width(self, bench2):
        p = np.array([[1.0, 0.2], [0.2, 3.0]])
        np.testing.assert_array_equal(davison_maki(bench2, p, 0.0, 0.0), p)

    def test_tan(self, tan_problem):
        assert davison_maki(tan_problem, [[0.0]], -Q4, 0.0)[0, 0] == pytest.approx(1.0, abs=1e-10)

    def test_benchmark(self, bench2):
        p0 = -0.1 * np.eye(2)
        ref = rk4_dre(bench2, p0, -0.1, 0.0, 10_000)
        assert rel_error(ref, davison_maki(bench2, p0, -0.1, 0.0)) <= 1e-9

    def test_escape(self, tan_problem):
        with pytest.raises(EscapeError):
            davison_maki(tan_problem, [[0.0]], -np.pi / 2, 0.0)

    def test_varying_matches_rk(self):
        pr = varying_problem()
        p0 = np.array([[0.1, 0.0], [0.0, -0.2]])
        ref = rk4_dre(pr, p0, -1.0, 0.0, 4000)
        assert rel_error(ref, davison_maki(pr, p0, -1.0, 0.0, 1000)) < 1e-10
