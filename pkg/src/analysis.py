"""
Error Analysis - DG norms, errors, rates, energy norm and inf-sup estimate

Norm evaluations here walk the quadrature directly; the assembled Gram
matrices of the assembly module are a second, independent path to the same
numbers, which is what the tests compare.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.sparse import linalg as spla

from .assembly import (
    assemble_coupling_B,
    assemble_dg_norm_matrix,
    assemble_l2_mass,
    assemble_pstab_D,
)
from .errors import AnalysisError
from .event_bus import get_event_bus
from .mesh import PolyMesh
from .physics import (
    PenaltyKind,
    PenaltyParams,
    Problem,
    TpeCoefficients,
    d0 as porosity_d0,
    penalty,
)
from .quadrature import face_quadrature
from .solver import FixedPointConfig, SolutionState, SolveOptions, ThetaScheme, ThetaStepper
from .space import DgSpace, FieldId

logger = logging.getLogger(__name__)

_NORM_KIND = {FieldId.T: PenaltyKind.HEAT, FieldId.P: PenaltyKind.FLOW, FieldId.U: PenaltyKind.ELASTICITY}


@dataclass
class ErrorReport:
    """Errors of one mesh level at the final time"""
    n_cells: int
    h: float
    degree: int
    err_u_dg: float
    err_p_l2: float
    err_T_l2: float
    err_p_dg: float
    err_T_dg: float
    err_u_l2: float = 0.0
    err_phi_l2: float = 0.0
    mean_iterations: float = 0.0
    integrated: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("err_u_dg", "err_p_l2", "err_T_l2", "err_p_dg", "err_T_dg", "err_u_l2", "err_phi_l2"):
            if getattr(self, name) < 0.0:
                raise AnalysisError(f"{name} must be >= 0")


@dataclass(frozen=True)
class EnergyWeights:
    """Weights of the φ term of the energy norm: (𝔹 + d0)"""
    infsup_B: float = 1.0
    d0: float = 0.0

    def __post_init__(self):
        if self.infsup_B + self.d0 < 0.0:
            raise AnalysisError("infsup_B + d0 must be >= 0")

    @classmethod
    def for_coefficients(cls, coeffs: TpeCoefficients, infsup_B: float = 1.0) -> "EnergyWeights":
        """d0 from the porosity when it is known, 0 otherwise"""
        return cls(infsup_B=infsup_B, d0=porosity_d0(coeffs) if coeffs.porosity is not None else 0.0)


# Quadrature-level norms

def _cell_gradient_sq(space: DgSpace, fid: FieldId, vec: np.ndarray, coeffs: TpeCoefficients,
                      c: int, exact_grad: Optional[Callable] = None, t: float = 0.0) -> float:
    rule, basis = space.error_rule(c)
    _, grads = space.evaluate(fid, vec, c, basis)
    if exact_grad is not None:
        grads = np.asarray(exact_grad(rule.points[:, 0], rule.points[:, 1], t)) - grads
    if fid == FieldId.U:
        eps = 0.5 * (grads + np.swapaxes(grads, -1, -2))
        return float(2.0 * coeffs.mu_cell(c) * np.einsum("q,qij,qij->", rule.weights, eps, eps))
    tensor = coeffs.Theta_cell(c) if fid == FieldId.T else coeffs.K_cell(c)
    return float(np.einsum("q,qi,ij,qj->", rule.weights, grads, tensor, grads))


def _trace(space: DgSpace, fid: FieldId, vec: np.ndarray, c: int, points: np.ndarray) -> np.ndarray:
    values, _ = space.evaluate_at(fid, vec, c, points)
    return values


def _face_jump_sq(space: DgSpace, fid: FieldId, vec: np.ndarray, f: int,
                  exact: Optional[Callable] = None, t: float = 0.0) -> float:
    """‖⟦·⟧‖²_F of the discrete field (or of exact - discrete on boundary faces)"""
    face = space.mesh.faces[f]
    rule = face_quadrature(face, space.error_order)
    pts = rule.points
    plus = _trace(space, fid, vec, face.cell_plus, pts)
    if face.is_interior:
        diff = plus - _trace(space, fid, vec, face.cell_minus, pts)
    elif exact is not None:
        diff = np.asarray(exact(pts[:, 0], pts[:, 1], t)) - plus
    else:
        diff = plus
    if fid == FieldId.U:
        n = np.asarray(face.normal)
        outer = diff[:, :, None] * n[None, None, :]
        jump = 0.5 * (outer + np.swapaxes(outer, -1, -2))
        return float(np.einsum("q,qij,qij->", rule.weights, jump, jump))
    return float(rule.weights @ (diff * diff))


def dg_norm(fid: FieldId, vec: np.ndarray, space: DgSpace, coeffs: TpeCoefficients,
            penalties: PenaltyParams) -> float:
    """
    Broken energy norm, faces summed over interior and boundary faces

        ‖S‖²_{DG,T} = ‖√Θ ∇_h S‖² + Σ_F σ‖⟦S⟧‖²_F   (K, ξ for p; 2μ ε_h, ζ for u)
    """
    return dg_error(fid, None, None, vec, space, coeffs, penalties)


def dg_error(fid: FieldId, exact: Optional[Callable], exact_grad: Optional[Callable],
             vec: np.ndarray, space: DgSpace, coeffs: TpeCoefficients,
             penalties: PenaltyParams, t: float = 0.0) -> float:
    """DG norm of exact - discrete; boundary jumps use the exact trace"""
    if fid not in _NORM_KIND:
        raise AnalysisError(f"no DG norm for {fid.value}")
    mesh = space.mesh
    total = 0.0
    for c in range(mesh.n_cells):
        total += _cell_gradient_sq(space, fid, vec, coeffs, c, exact_grad, t)
    for f in range(mesh.n_faces):
        pen = penalty(mesh.faces[f], _NORM_KIND[fid], space, coeffs, penalties)
        total += pen * _face_jump_sq(space, fid, vec, f, exact, t)
    return math.sqrt(max(total, 0.0))


def l2_error(fid: FieldId, exact: Optional[Callable], vec: np.ndarray, space: DgSpace,
             t: float = 0.0) -> float:
    """‖exact - discrete‖_{L²(Ω)} on the error quadrature; exact=None gives the norm"""
    total = 0.0
    for c in range(space.mesh.n_cells):
        rule, basis = space.error_rule(c)
        values, _ = space.evaluate(fid, vec, c, basis)
        if exact is not None:
            values = np.asarray(exact(rule.points[:, 0], rule.points[:, 1], t)) - values
        sq = values * values if values.ndim == 1 else np.sum(values * values, axis=-1)
        total += float(rule.weights @ sq)
    return math.sqrt(total)


def l2_norm(fid: FieldId, vec: np.ndarray, space: DgSpace) -> float:
    return l2_error(fid, None, vec, space)


def roc(errors: Sequence[float], h: Sequence[float]) -> List[float]:
    """
    Rates log(e_{i-1}/e_i) / log(h_{i-1}/h_i) between consecutive levels

    Raises:
        AnalysisError: Fewer than two levels, non-positive errors or h not strictly decreasing
    """
    if len(errors) != len(h) or len(errors) < 2:
        raise AnalysisError("roc needs two or more levels of matching length")
    e = np.asarray(errors, dtype=float)
    hh = np.asarray(h, dtype=float)
    if np.any(e <= 0.0):
        raise AnalysisError("errors must be positive to compute rates")
    if np.any(np.diff(hh) >= 0.0):
        raise AnalysisError("h must be strictly decreasing")
    return list(np.log(e[:-1] / e[1:]) / np.log(hh[:-1] / hh[1:]))


def energy_norm(state: SolutionState, weights: EnergyWeights, space: DgSpace,
                coeffs: TpeCoefficients, penalties: PenaltyParams) -> float:
    """‖X‖²_ℰ = (𝔹+d0)‖φ‖² + (a0-b0)‖T‖² + (c0-b0)‖p‖² + ‖u‖²_{DG,e}"""
    total = ((weights.infsup_B + weights.d0) * l2_norm(FieldId.PHI, state.phi, space) ** 2
             + (coeffs.a0 - coeffs.b0) * l2_norm(FieldId.T, state.T, space) ** 2
             + (coeffs.c0 - coeffs.b0) * l2_norm(FieldId.P, state.p, space) ** 2
             + dg_norm(FieldId.U, state.u, space, coeffs, penalties) ** 2)
    return math.sqrt(max(total, 0.0))


def estimate_infsup(space: DgSpace, coeffs: Optional[TpeCoefficients] = None,
                    penalties: PenaltyParams = PenaltyParams()) -> float:
    """
    Discrete stability constant of the u-φ coupling augmented by 𝒟_h

    Smallest generalized eigenvalue of (Bᵀ A_e⁻¹ B + D) ψ = λ M_φ ψ on the
    M_φ-orthogonal complement of constants (constants lie in the kernel of
    both ℬ_h(·, v) and 𝒟_h), A_e the DG elasticity norm matrix. Returns √λ.
    Dense: meant for desk-scale meshes.
    """
    coeffs = coeffs or TpeCoefficients(a0=0.0, b0=0.0, c0=0.0, alpha=1.0, beta=1.0,
                                       mu=1.0, lam=1.0, K=np.eye(2), Theta=np.eye(2))
    A = assemble_dg_norm_matrix(FieldId.U, space, coeffs, penalties).tocsc()
    B = assemble_coupling_B(space).toarray()
    D = assemble_pstab_D(space, penalties, coeffs).toarray()
    M = assemble_l2_mass(space, FieldId.PHI).toarray()
    try:
        AinvB = spla.splu(A).solve(B)
    except RuntimeError as e:
        raise AnalysisError(f"elasticity norm matrix is singular: {e}") from e
    schur = B.T @ AinvB + D
    schur = 0.5 * (schur + schur.T)

    ones = space.project(FieldId.PHI, lambda x, y: np.ones_like(x))
    if M.shape[0] > 1:
        Q = linalg.null_space((M @ ones)[None, :])
        schur = Q.T @ schur @ Q
        M = Q.T @ M @ Q
    try:
        eigenvalues = linalg.eigh(schur, M, eigvals_only=True)
    except linalg.LinAlgError as e:
        raise AnalysisError(f"inf-sup eigenproblem failed: {e}") from e
    smallest = float(max(eigenvalues[0], 0.0))
    logger.info(f"inf-sup estimate: 𝔹 = {math.sqrt(smallest):.6f} on {space.mesh.n_cells} cells")
    return math.sqrt(smallest)


# Convergence studies

def final_errors(problem: Problem, space: DgSpace, state: SolutionState,
                 penalties: PenaltyParams, mean_iterations: float = 0.0,
                 integrated: Optional[Dict[str, float]] = None) -> ErrorReport:
    """ErrorReport of a state against the problem's exact solution"""
    ex = problem.exact
    if ex is None:
        raise AnalysisError(f"problem {problem.name} has no exact solution")
    co = problem.coefficients
    t = state.time
    return ErrorReport(
        n_cells=space.mesh.n_cells,
        h=space.mesh.h,
        degree=space.degree,
        err_u_dg=dg_error(FieldId.U, ex.u, ex.grad_u, state.u, space, co, penalties, t),
        err_p_l2=l2_error(FieldId.P, ex.p, state.p, space, t),
        err_T_l2=l2_error(FieldId.T, ex.T, state.T, space, t),
        err_p_dg=dg_error(FieldId.P, ex.p, ex.grad_p, state.p, space, co, penalties, t),
        err_T_dg=dg_error(FieldId.T, ex.T, ex.grad_T, state.T, space, co, penalties, t),
        err_u_l2=l2_error(FieldId.U, ex.u, state.u, space, t),
        err_phi_l2=l2_error(FieldId.PHI, ex.phi, state.phi, space, t),
        mean_iterations=mean_iterations,
        integrated=integrated or {},
    )


RATE_COLUMNS = ("err_u_dg", "err_p_l2", "err_T_l2", "err_p_dg", "err_T_dg")


@dataclass
class ConvergenceTable:
    """Error reports per level plus the rates between consecutive levels"""
    label: str
    reports: List[ErrorReport] = field(default_factory=list)

    def rates(self, column: str) -> List[float]:
        if len(self.reports) < 2:
            return []
        return roc([getattr(r, column) for r in self.reports], [r.h for r in self.reports])

    def final_rates(self) -> Dict[str, float]:
        return final_rates(self)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for i, rep in enumerate(self.reports):
            row = {"n_cells": rep.n_cells, "h": rep.h, "inv_h": 1.0 / rep.h}
            for col in RATE_COLUMNS:
                row[col] = getattr(rep, col)
                row[f"roc_{col[4:]}"] = self.rates(col)[i - 1] if i > 0 else np.nan
            row["err_u_l2"] = rep.err_u_l2
            row["err_phi_l2"] = rep.err_phi_l2
            row["mean_fp_iterations"] = rep.mean_iterations
            rows.append(row)
        return pd.DataFrame(rows)


def final_rates(table: ConvergenceTable) -> Dict[str, float]:
    """Rate between the last two levels for every error column"""
    return {col: table.rates(col)[-1] for col in RATE_COLUMNS if len(table.reports) >= 2}


def write_convergence_csv(table: ConvergenceTable, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_frame().to_csv(path, index=False, float_format="%.10e", na_rep="")
    return path


def convergence_study(problem: Problem, meshes: Sequence[PolyMesh], degree: int,
                      scheme: ThetaScheme, fixed_point: FixedPointConfig = FixedPointConfig(),
                      penalties: PenaltyParams = PenaltyParams(),
                      solve_options: SolveOptions = SolveOptions(),
                      phi_degree: Optional[int] = None, degree_u: Optional[int] = None,
                      label: str = "convergence",
                      on_level: Optional[Callable[[int, ThetaStepper, SolutionState], None]] = None) -> ConvergenceTable:
    """
    Solve on every mesh (ordered by decreasing h) and tabulate the final-time errors

    Args:
        on_level: Called with (level, stepper, final state) for field and matrix output
    """
    hs = [m.h for m in meshes]
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise AnalysisError("meshes must be ordered by decreasing h", {"h": hs})
    bus = get_event_bus()
    table = ConvergenceTable(label)
    for level, mesh in enumerate(meshes):
        space = DgSpace(mesh, degree, phi_degree, degree_u)
        stepper = ThetaStepper(space, problem, scheme, fixed_point, penalties, solve_options)

        def squared(state: SolutionState) -> Dict[str, float]:
            ex = problem.exact
            co = problem.coefficients
            return {
                "u_dg": dg_error(FieldId.U, ex.u, ex.grad_u, state.u, space, co, penalties, state.time) ** 2,
                "p_dg": dg_error(FieldId.P, ex.p, ex.grad_p, state.p, space, co, penalties, state.time) ** 2,
                "T_dg": dg_error(FieldId.T, ex.T, ex.grad_T, state.T, space, co, penalties, state.time) ** 2,
            }

        error_fn = squared if scheme.n_steps > 1 else None
        result = stepper.run(error_fn=error_fn, log_every=max(1, scheme.n_steps // 10))
        report = final_errors(problem, space, result.final, penalties,
                              result.mean_iterations, result.integrated_errors)
        table.reports.append(report)
        if on_level is not None:
            on_level(level, stepper, result.final)
        logger.info(f"{label} level {level}: N={mesh.n_cells} h={mesh.h:.4f} "
                    f"|u|_DG={report.err_u_dg:.4e} p_L2={report.err_p_l2:.4e} T_L2={report.err_T_l2:.4e}")
        bus.publish("level_completed", "analysis", {"label": label, "level": level, **_flat(report)})

    if len(table.reports) >= 2:
        for col, rate in table.final_rates().items():
            logger.info(f"{label} final rate {col}: {rate:.3f}")
    return table


def _flat(report: ErrorReport) -> Dict[str, float]:
    data = asdict(report)
    data.pop("integrated")
    return data
