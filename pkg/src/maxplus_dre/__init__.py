"""Max-plus fundamental solutions for matrix differential Riccati equations.

The package solves ``-dp/dt = A'p + pA + C + p Sigma p`` backward in time
through a bivariate quadratic particular solution ``(P, S, Q)``.  From it are
built the max-plus kernel that propagates any terminal condition, a
dual-space kernel, three doubling algorithms for constant coefficients and
two closed-form solvers.
"""

from . import bench, dre_core, errors, matrix_core, maxplus_kernel, semiconvex, time_invariant
from .bench import (
    BenchRecord,
    StiffBenchSpec,
    choi_laub_analytic,
    choi_laub_problem,
    run_doubling_sweep,
    run_stiff_bench,
    tan_demo,
    truth_solve,
)
from .dre_core import (
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
from .errors import *  # noqa: F401,F403
from .matrix_core import (
    CondReport,
    care_extremal_solutions,
    inverse,
    lyapunov_solve,
    mat_exp,
    pseudo_inverse,
    rel_error,
    van_loan_integral,
)
from .maxplus_kernel import (
    DegenerateKernel,
    MaxPlusKernel,
    is_reachable,
    kernel_compose,
    kernel_from_bivariate,
    kernel_from_bivariate_pseudo,
    kernel_from_transition,
    kernel_propagate,
    propagate_via_psq,
)
from .semiconvex import (
    DualDreCoefficients,
    DualityKernel,
    DualKernelB,
    SymplecticK,
    dual_coefficients,
    dual_hamiltonian,
    dual_kernel_B,
    dual_kernel_compose,
    dual_kernel_propagate,
    dual_value,
    k_matrix,
    matching_residual,
    primal_value,
    similarity_residual,
    stationary_dual,
)
from .time_invariant import (
    DoublingSchedule,
    TiProblem,
    flop_model,
    leipnik_solve,
    method_a_solve,
    method_b_solve,
    method_c_solve,
    rusnak_solve,
    seed_psq,
)

__version__ = "0.1.0"
