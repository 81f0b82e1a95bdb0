"""
Time Stepper - θ-method with fixed-point linearization of the convection

Each step solves

    [M/Δt + θ S(T*)] Xⁿ⁺¹ = [M/Δt] Xⁿ - (1-θ) S(Tⁿ) Xⁿ + θFⁿ⁺¹ + (1-θ)Fⁿ + (Gⁿ⁺¹ - Gⁿ)/Δt

where M is the mass-like operator, S the stiffness-like one, T* the latest
fixed-point iterate of the temperature and G the mass-like load. Only the
convection block of S changes between iterations; the full coupled system
is solved every time.

Why one monolithic solve per iteration?
- The fixed point only freezes ∇T in the convective term, nothing else
- One factorization path serves linear and nonlinear runs alike
- Linear runs (c_f = 0) factorize once and reuse it for every step
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .assembly import BlockOperator, LoadVector, assemble_convection, assemble_load, assemble_operators
from .config import settings
from .errors import ConfigError, FixedPointError, LinearSolveError
from .event_bus import DiagnosticsBus, EventPriority, get_event_bus
from .physics import PenaltyParams, Problem
from .space import DgSpace, FieldId

logger = logging.getLogger(__name__)

NORM_GUARD = 1e-300


@dataclass(frozen=True)
class ThetaScheme:
    """
    Uniform θ-method grid

    Attributes:
        theta: 1 is backward Euler, 1/2 Crank-Nicolson
        dt: Step length
        t_final: End time, an integer multiple of dt
    """
    theta: float = 0.5
    dt: float = 1.0
    t_final: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ConfigError("theta must lie in [1/2, 1]", {"theta": self.theta})
        if self.dt <= 0.0 or self.t_final <= 0.0:
            raise ConfigError("dt and t_final must be positive")
        n = round(self.t_final / self.dt)
        if n < 1 or abs(n * self.dt - self.t_final) > 1e-12 * max(1.0, self.t_final):
            raise ConfigError("t_final must be an integer multiple of dt",
                              {"dt": self.dt, "t_final": self.t_final})

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @classmethod
    def steady(cls) -> "ThetaScheme":
        """One backward Euler step of unit length"""
        return cls(theta=1.0, dt=1.0, t_final=1.0)


@dataclass(frozen=True)
class FixedPointConfig:
    """Stopping rule and start of the convection fixed point"""
    tolerance: float = 1e-8
    max_iterations: int = 50
    initial_guess: str = "previous_step"
    linearization: str = "temperature_gradient"

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise ConfigError("fixed-point tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigError("fixed-point max_iterations must be >= 1")
        if self.initial_guess not in ("previous_step", "zero_gradient"):
            raise ConfigError(f"unknown initial guess: {self.initial_guess}")
        if self.linearization not in ("temperature_gradient", "darcy_flux"):
            raise ConfigError(f"unknown linearization: {self.linearization}")


@dataclass(frozen=True)
class SolveOptions:
    """Linear solve contract: direct sparse LU or ILU-preconditioned GMRES"""
    method: str = "direct"
    rtol: float = 1e-10
    max_iterations: int = 2000


@dataclass
class SolutionState:
    """Snapshot of the discrete fields at one time"""
    time: float
    u: np.ndarray
    p: np.ndarray
    T: np.ndarray
    phi: np.ndarray
    last_iteration_count: int = 0

    def vector(self, space: DgSpace) -> np.ndarray:
        return space.join({FieldId.U: self.u, FieldId.P: self.p, FieldId.T: self.T, FieldId.PHI: self.phi})

    def field(self, fid: FieldId) -> np.ndarray:
        return {FieldId.U: self.u, FieldId.P: self.p, FieldId.T: self.T, FieldId.PHI: self.phi}[fid]

    @classmethod
    def from_vector(cls, space: DgSpace, x: np.ndarray, time: float, iterations: int = 0) -> "SolutionState":
        parts = space.split(x)
        return cls(time=time, u=parts[FieldId.U].copy(), p=parts[FieldId.P].copy(),
                   T=parts[FieldId.T].copy(), phi=parts[FieldId.PHI].copy(),
                   last_iteration_count=iterations)


def project_initial_state(problem: Problem, space: DgSpace) -> SolutionState:
    """
    L² projection of u₀, p₀, T₀ and φ₀ := Π(λ∇·u₀ - αp₀ - βT₀)

    The divergence is taken from the projected displacement, which equals
    ∇·u₀ whenever u₀ is a polynomial of the displacement degree.
    """
    co = problem.coefficients
    u = space.project(FieldId.U, lambda x, y: problem.u0(x, y, 0.0))
    p = space.project(FieldId.P, lambda x, y: problem.p0(x, y, 0.0))
    T = space.project(FieldId.T, lambda x, y: problem.T0(x, y, 0.0))

    n_phi = space.n_basis(FieldId.PHI)
    phi = np.zeros(space.n_field_dofs(FieldId.PHI))
    for c in range(space.mesh.n_cells):
        rule, basis = space.error_rule(c)
        x, y = rule.points[:, 0], rule.points[:, 1]
        _, grad_u = space.evaluate(FieldId.U, u, c, basis)
        div_u = grad_u[:, 0, 0] + grad_u[:, 1, 1]
        target = (co.lam * div_u
                  - co.alpha * np.broadcast_to(problem.p0(x, y, 0.0), x.shape)
                  - co.beta * np.broadcast_to(problem.T0(x, y, 0.0), x.shape))
        phi[space.cell_dofs(FieldId.PHI, c)] = basis.values[:, :n_phi].T @ (rule.weights * target)
    return SolutionState(time=0.0, u=u, p=p, T=T, phi=phi)


# Linear solves

class SparseSolver:
    """
    Factorize once, solve many times

    Direct solves use SuperLU (or spsolve, per TPE_DIRECT_SOLVER) with one
    step of iterative refinement; the iterative path is restarted GMRES with
    an incomplete-LU preconditioner.
    """

    def __init__(self, options: SolveOptions = SolveOptions()):
        self.options = options
        self._matrix: Optional[sparse.csc_matrix] = None
        self._lu = None
        self._ilu = None
        self.last_residual = 0.0

    def factorize(self, matrix: sparse.spmatrix) -> "SparseSolver":
        if matrix.shape[0] != matrix.shape[1]:
            raise LinearSolveError("matrix must be square", {"shape": list(matrix.shape)})
        self._matrix = sparse.csc_matrix(matrix)
        try:
            if self.options.method == "direct":
                if settings.direct_solver == "splu":
                    self._lu = spla.splu(self._matrix)
            elif self.options.method == "iterative":
                self._ilu = spla.spilu(self._matrix, drop_tol=1e-6, fill_factor=20)
            else:
                raise LinearSolveError(f"unknown solve method: {self.options.method}")
        except RuntimeError as e:
            raise LinearSolveError(f"factorization failed: {e}", {"n": self._matrix.shape[0]}) from e
        return self

    def _direct(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is not None:
            return self._lu.solve(rhs)
        return spla.spsolve(self._matrix, rhs)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._matrix is None:
            raise LinearSolveError("solve called before factorize")
        rhs = np.asarray(rhs, dtype=float)
        b_norm = np.linalg.norm(rhs)
        if b_norm == 0.0:
            return np.zeros_like(rhs)
        if self.options.method == "iterative":
            precond = spla.LinearOperator(self._matrix.shape, self._ilu.solve)
            x, info = spla.gmres(self._matrix, rhs, M=precond, rtol=self.options.rtol,
                                 atol=0.0, restart=200, maxiter=self.options.max_iterations)
            if info != 0:
                raise LinearSolveError("GMRES did not converge", {"info": int(info)})
        else:
            x = self._direct(rhs)
        if not np.all(np.isfinite(x)):
            raise LinearSolveError("singular linear system (non-finite solution)")
        residual = np.linalg.norm(self._matrix @ x - rhs) / b_norm
        if residual > self.options.rtol and self.options.method == "direct":
            x = x + self._direct(rhs - self._matrix @ x)
            residual = np.linalg.norm(self._matrix @ x - rhs) / b_norm
            if residual > self.options.rtol:
                logger.warning(f"linear residual {residual:.2e} above target after refinement")
        self.last_residual = float(residual)
        return x


def linear_solve(matrix: sparse.spmatrix, rhs: np.ndarray,
                 options: SolveOptions = SolveOptions()) -> np.ndarray:
    """Solve matrix x = rhs to relative residual options.rtol"""
    return SparseSolver(options).factorize(matrix).solve(rhs)


# Stepping

@dataclass
class StepDiagnostics:
    """One row of the diagnostics CSV"""
    step: int
    time: float
    fp_iterations: int
    energy: float
    mass_energy: float
    residual: float


@dataclass
class RunResult:
    """Outcome of a time-stepping run"""
    final: SolutionState
    diagnostics: List[StepDiagnostics] = field(default_factory=list)
    states: List[SolutionState] = field(default_factory=list)
    integrated_errors: Dict[str, float] = field(default_factory=dict)

    @property
    def mean_iterations(self) -> float:
        if not self.diagnostics:
            return 0.0
        return float(np.mean([d.fp_iterations for d in self.diagnostics]))

    @property
    def energies(self) -> np.ndarray:
        return np.array([d.energy for d in self.diagnostics])


class ThetaStepper:
    """
    Advances a problem on a fixed space

    Args:
        space: Discrete space
        problem: Coefficients, data and boundary conditions
        scheme: θ-method grid
        fixed_point: Convection fixed-point settings
        penalties: Face penalty multipliers
        solve_options: Linear solve contract
        operators: Pre-assembled blocks (assembled here when omitted)
        bus: Diagnostics bus (process bus when omitted)
    """

    def __init__(self, space: DgSpace, problem: Problem, scheme: ThetaScheme,
                 fixed_point: FixedPointConfig = FixedPointConfig(),
                 penalties: PenaltyParams = PenaltyParams(),
                 solve_options: SolveOptions = SolveOptions(),
                 operators: Optional[BlockOperator] = None,
                 bus: Optional[DiagnosticsBus] = None):
        self.space = space
        self.problem = problem
        self.scheme = scheme
        self.fixed_point = fixed_point
        self.penalties = penalties
        self.solve_options = solve_options
        self.operators = operators or assemble_operators(space, problem, penalties)
        self.bus = bus or get_event_bus()

        self.mass = self.operators.mass_matrix()
        self.stiffness = self.operators.stiffness_matrix()
        self.energy_matrix = self.operators.energy_matrix()
        self._mass_energy_matrix = self.operators.mass_energy_matrix()
        self._linear_solver: Optional[SparseSolver] = None
        self.last_residual = 0.0

    @property
    def nonlinear(self) -> bool:
        return self.problem.coefficients.c_f > 0.0

    def _convection_block(self):
        if self.fixed_point.linearization == "darcy_flux":
            return (FieldId.T, FieldId.T)
        return (FieldId.T, FieldId.P)

    def stiffness_at(self, x: np.ndarray) -> sparse.csr_matrix:
        """Stiffness-like operator with the convection frozen at the fields of x"""
        if not self.nonlinear:
            return self.stiffness
        parts = self.space.split(x)
        conv = assemble_convection(self.space, self.problem.coefficients,
                                   temperature=parts[FieldId.T], pressure=parts[FieldId.P],
                                   linearization=self.fixed_point.linearization)
        return self.operators.stiffness_matrix(conv, self._convection_block())

    def _solver_for(self, matrix: sparse.csr_matrix) -> SparseSolver:
        if self.nonlinear:
            return SparseSolver(self.solve_options).factorize(matrix)
        if self._linear_solver is None:
            self._linear_solver = SparseSolver(self.solve_options).factorize(matrix)
        return self._linear_solver

    def energy(self, x: np.ndarray) -> float:
        """ℳ_h(X, X) + 𝒟_h(φ, φ) + 𝒜_h^e(u, u)"""
        return float(x @ (self.energy_matrix @ x))

    def mass_energy(self, x: np.ndarray) -> float:
        return float(x @ (self._mass_energy_matrix @ x))

    def step(self, state: SolutionState, load_now: LoadVector, load_next: LoadVector,
             step_index: int = 0) -> SolutionState:
        """
        One θ-step

        Raises:
            FixedPointError: Increment still above tolerance after max_iterations
            LinearSolveError: Singular or unsolvable system
        """
        theta, dt = self.scheme.theta, self.scheme.dt
        x_now = state.vector(self.space)
        explicit = self.stiffness_at(x_now) @ x_now if theta < 1.0 else 0.0
        rhs = (self.mass @ x_now) / dt - (1.0 - theta) * explicit \
            + theta * load_next.vector() + (1.0 - theta) * load_now.vector() \
            + (load_next.mass_vector() - load_now.mass_vector()) / dt

        guess = x_now.copy()
        if self.fixed_point.initial_guess == "zero_gradient":
            guess[self.space.field_slice(FieldId.T)] = 0.0
            guess[self.space.field_slice(FieldId.P)] = 0.0
        increment = np.inf
        for iteration in range(1, self.fixed_point.max_iterations + 1):
            lhs = (self.mass / dt + theta * self.stiffness_at(guess)).tocsr()
            solver = self._solver_for(lhs)
            x_next = solver.solve(rhs)
            self.last_residual = solver.last_residual
            increment = np.linalg.norm(x_next - guess) / max(np.linalg.norm(x_next), NORM_GUARD)
            guess = x_next
            self.bus.publish("fixed_point_iteration", "solver",
                             {"step": step_index, "iteration": iteration, "increment": float(increment)},
                             EventPriority.LOW)
            logger.debug(f"step {step_index} fixed-point iteration {iteration}: increment {increment:.3e}")
            if not self.nonlinear or increment < self.fixed_point.tolerance:
                break
        else:
            raise FixedPointError(
                f"fixed point did not converge in {self.fixed_point.max_iterations} iterations",
                iterations=self.fixed_point.max_iterations, increment=float(increment),
                details={"step": step_index, "time": state.time + dt},
            )
        if self.nonlinear and iteration > 10:
            logger.warning(f"slow fixed-point convergence at step {step_index}: {iteration} iterations")
        return SolutionState.from_vector(self.space, guess, state.time + dt, iteration)

    def run(self, initial: Optional[SolutionState] = None, keep_states: bool = False,
            error_fn: Optional[Callable[[SolutionState], Dict[str, float]]] = None,
            log_every: int = 0, monitor_energy: bool = False,
            on_step: Optional[Callable[[int, SolutionState], None]] = None) -> RunResult:
        """
        Advance from t = 0 to t_final

        Args:
            initial: Start state (projected initial data when omitted)
            keep_states: Keep every state, not only the final one
            error_fn: Squared errors of a state; integrated in time by the trapezoidal rule
            log_every: INFO summary cadence in steps (0: first and last only)
            monitor_energy: Warn when the energy grows (meaningful for homogeneous data only)
            on_step: Called with (step, state) after every step (field writers, probes)
        """
        state = initial or project_initial_state(self.problem, self.space)
        result = RunResult(final=state)
        if keep_states:
            result.states.append(state)
        dt = self.scheme.dt
        load_now = assemble_load(self.space, self.problem, state.time, self.penalties)
        previous_errors = error_fn(state) if error_fn else None
        previous_energy = self.energy(state.vector(self.space))
        n_steps = self.scheme.n_steps
        logger.info(f"{self.problem.name}: {n_steps} steps, θ={self.scheme.theta}, Δt={dt:g}, "
                    f"{self.space.n_dofs} dofs")

        for n in range(1, n_steps + 1):
            t_next = n * dt
            load_next = assemble_load(self.space, self.problem, t_next, self.penalties)
            try:
                state = self.step(state, load_now, load_next, n)
            except Exception as e:
                self.bus.publish("run_failed", "solver", {"step": n, "error": str(e)}, EventPriority.CRITICAL)
                raise
            state.time = t_next
            x = state.vector(self.space)
            diag = StepDiagnostics(step=n, time=t_next, fp_iterations=state.last_iteration_count,
                                   energy=self.energy(x), mass_energy=self.mass_energy(x),
                                   residual=self.last_residual)
            result.diagnostics.append(diag)
            if diag.energy > previous_energy * (1.0 + 1e-12) + 1e-300 and monitor_energy:
                logger.warning(f"energy increased at step {n}: {previous_energy:.6e} -> {diag.energy:.6e}")
            previous_energy = diag.energy
            self.bus.publish("step_completed", "solver", asdict(diag))
            if error_fn:
                errors = error_fn(state)
                for key, value in errors.items():
                    result.integrated_errors[key] = (result.integrated_errors.get(key, 0.0)
                                                     + 0.5 * dt * (previous_errors[key] + value))
                previous_errors = errors
            if on_step is not None:
                on_step(n, state)
            if keep_states:
                result.states.append(state)
            if n == 1 or n == n_steps or (log_every and n % log_every == 0):
                logger.info(f"step {n}/{n_steps} t={t_next:.6g} iterations={diag.fp_iterations} "
                            f"energy={diag.energy:.6e}")
            load_now = load_next

        result.final = state
        if self.nonlinear:
            logger.info(f"mean fixed-point iterations per step: {result.mean_iterations:.2f}")
        result.integrated_errors = {k: float(np.sqrt(v)) for k, v in result.integrated_errors.items()}
        return result


def run(problem: Problem, space: DgSpace, scheme: ThetaScheme,
        fixed_point: FixedPointConfig = FixedPointConfig(),
        penalties: PenaltyParams = PenaltyParams(),
        solve_options: SolveOptions = SolveOptions(), **kwargs) -> RunResult:
    """Assemble, project the initial data and step to t_final"""
    stepper = ThetaStepper(space, problem, scheme, fixed_point, penalties, solve_options)
    return stepper.run(**kwargs)
