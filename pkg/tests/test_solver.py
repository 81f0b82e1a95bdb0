"""θ-stepping, fixed point and linear solves"""

import numpy as np
import pytest
from scipy import sparse

from helpers import zero_data_problem
from src.errors import ConfigError, FixedPointError, LinearSolveError
from src.event_bus import DiagnosticsBus
from src.mesh import Rectangle, generate_cartesian
from src.physics import PenaltyParams, baseline_coefficients, convergence_case, homogeneous_dirichlet
from src.solver import (
    FixedPointConfig,
    SolutionState,
    SolveOptions,
    SparseSolver,
    ThetaScheme,
    ThetaStepper,
    linear_solve,
    project_initial_state,
    run,
)
from src.space import DgSpace, FieldId


@pytest.fixture
def square2_space():
    return DgSpace(generate_cartesian(Rectangle(0.0, 2.0, 0.0, 2.0), 2, 2), 1)


def test_theta_scheme_validation():
    assert ThetaScheme(0.5, 0.1, 1.0).n_steps == 10
    assert ThetaScheme.steady() == ThetaScheme(1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        ThetaScheme(0.4, 0.1, 1.0)
    with pytest.raises(ConfigError):
        ThetaScheme(1.0, 0.3, 1.0)
    with pytest.raises(ConfigError):
        ThetaScheme(1.0, -0.1, 1.0)


def test_fixed_point_config_validation():
    with pytest.raises(ConfigError):
        FixedPointConfig(tolerance=0.0)
    with pytest.raises(ConfigError):
        FixedPointConfig(max_iterations=0)
    with pytest.raises(ConfigError):
        FixedPointConfig(initial_guess="random")


@pytest.mark.parametrize("method", ["direct", "iterative"])
def test_small_linear_solve(method):
    A = sparse.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    x = linear_solve(A, np.array([1.0, 1.0]), SolveOptions(method=method))
    assert x == pytest.approx([1.0 / 3.0, 1.0 / 3.0], rel=1e-9)


def test_zero_rhs_short_circuits():
    solver = SparseSolver().factorize(sparse.identity(3, format="csr"))
    assert not solver.solve(np.zeros(3)).any()


def test_singular_matrix_reported():
    A = sparse.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(LinearSolveError):
        linear_solve(A, np.array([1.0, 0.0]))


def test_solve_before_factorize():
    with pytest.raises(LinearSolveError):
        SparseSolver().solve(np.ones(2))


def test_initial_phi_from_data(space_l1, coeffs):
    problem = zero_data_problem(coeffs, homogeneous_dirichlet(), T0=2.0)
    state = project_initial_state(problem, space_l1)
    ones = space_l1.project(FieldId.PHI, lambda x, y: np.ones_like(x))
    assert state.phi == pytest.approx(-coeffs.beta * 2.0 * ones)
    assert not state.u.any()
    assert state.time == 0.0


def test_state_vector_layout(space_l1):
    x = np.arange(space_l1.n_dofs, dtype=float)
    state = SolutionState.from_vector(space_l1, x, 0.5, iterations=3)
    assert state.p[0] == space_l1.field_slice(FieldId.P).start
    assert state.last_iteration_count == 3
    assert np.array_equal(state.vector(space_l1), x)


def test_zero_data_stays_at_rest(space_l1, coeffs):
    problem = zero_data_problem(coeffs, homogeneous_dirichlet())
    result = run(problem, space_l1, ThetaScheme(0.5, 0.1, 0.3))
    assert not result.final.vector(space_l1).any()
    assert len(result.diagnostics) == 3


def test_energy_decays_for_backward_euler(space_l1, coeffs):
    problem = zero_data_problem(coeffs, homogeneous_dirichlet(), T0=1.0)
    stiff = PenaltyParams(alpha1=50.0, alpha2=50.0, alpha3=50.0)
    stepper = ThetaStepper(space_l1, problem, ThetaScheme(1.0, 0.05, 0.25), penalties=stiff)
    initial = project_initial_state(problem, space_l1)
    energies = [stepper.energy(initial.vector(space_l1))] + list(stepper.run(initial).energies)
    assert energies[0] > 0.0
    assert np.all(np.diff(energies) <= 1e-10 * energies[0])


def test_linear_runs_take_one_iteration(space_l1, coeffs):
    problem = zero_data_problem(coeffs, homogeneous_dirichlet(), T0=1.0)
    result = run(problem, space_l1, ThetaScheme(1.0, 0.1, 0.2))
    assert [d.fp_iterations for d in result.diagnostics] == [1, 1]
    assert result.mean_iterations == 1.0


def test_nonlinear_fixed_point_converges(square2_space):
    case = convergence_case(baseline_coefficients(c_f=1.0))
    result = run(case, square2_space, ThetaScheme(0.5, 0.01, 0.02), FixedPointConfig(tolerance=1e-10))
    assert 1.0 < result.mean_iterations < 50.0
    assert result.final.time == pytest.approx(0.02)


def test_darcy_flux_linearization_agrees(square2_space):
    case = convergence_case(baseline_coefficients(c_f=1.0))
    scheme = ThetaScheme(1.0, 0.01, 0.02)
    a = run(case, square2_space, scheme, FixedPointConfig(tolerance=1e-11))
    b = run(case, square2_space, scheme, FixedPointConfig(tolerance=1e-11, linearization="darcy_flux"))
    xa, xb = a.final.vector(square2_space), b.final.vector(square2_space)
    assert np.linalg.norm(xa - xb) <= 1e-7 * np.linalg.norm(xa)


def test_fixed_point_budget_exhausted(square2_space):
    case = convergence_case(baseline_coefficients(c_f=1.0))
    bus = DiagnosticsBus()
    failed = []
    bus.subscribe("run_failed", lambda e: failed.append(e.data), "failures")
    stepper = ThetaStepper(square2_space, case, ThetaScheme(0.5, 0.01, 0.02),
                           FixedPointConfig(max_iterations=1), bus=bus)
    with pytest.raises(FixedPointError) as info:
        stepper.run()
    assert info.value.iterations == 1
    assert failed and failed[0]["step"] == 1


def test_step_events(space_l1, coeffs):
    bus = DiagnosticsBus()
    seen = []
    bus.subscribe("step_completed", lambda e: seen.append(e.data["step"]), "collector")
    problem = zero_data_problem(coeffs, homogeneous_dirichlet(), T0=1.0)
    ThetaStepper(space_l1, problem, ThetaScheme(1.0, 0.1, 0.3), bus=bus).run()
    assert seen == [1, 2, 3]


def test_integrated_errors_recorded(square2_space):
    case = convergence_case()
    stepper = ThetaStepper(square2_space, case, ThetaScheme(1.0, 0.05, 0.1))
    result = stepper.run(error_fn=lambda state: {"t": state.time ** 2})
    # trapezoid of t² on [0, 0.1] at two steps, then the square root
    expected = np.sqrt(0.5 * 0.05 * (0.0 + 0.05 ** 2) + 0.5 * 0.05 * (0.05 ** 2 + 0.1 ** 2))
    assert result.integrated_errors["t"] == pytest.approx(expected)
