"""
Discrete Forms - sparse assembly of every block of the four-field system

    ℳ_h(Ẋ, Y) + 𝒜_h(X, Y) - ℬ_h(φ, v) + ℬ_h(ψ, u̇) = F(Y)

Blocks are indexed (test field, trial field) over u < p < T < φ and split in
two classes:
- mass-like (multiplied by the time derivative): the ℳ_h coupling over
  (p, T, φ), 𝒟_h on (φ, φ) and ℬ_h(ψ, u̇) on (φ, u)
- stiffness-like: 𝒜_h^e on (u, u), -ℬ_h(φ, v) on (u, φ), 𝒜_h^p, 𝒜_h^T and
  the convection block

Face conventions: on interior faces the jump of a scalar is
⟦a⟧ = a⁺n⁺ + a⁻n⁻, of a vector ⟦v⟧ = v⁺⊙n⁺ + v⁻⊙n⁻ (⊙ the symmetric outer
product) and ⟦v⟧_n = v⁺·n⁺ + v⁻·n⁻; averages are arithmetic. On boundary
faces ⟦a⟧ = a n and {a} = a.

Every local matrix is scattered as coordinate triplets, cells first then
faces, each in index order. The triplet order does not depend on the number
of worker threads, so neither do the summed matrices.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .errors import AssemblyError
from .parallel import ordered_map
from .physics import (
    BoundaryConditions,
    Dirichlet,
    Neumann,
    PenaltyKind,
    PenaltyParams,
    Problem,
    Robin,
    TpeCoefficients,
    penalty,
)
from .space import FIELD_ORDER, BasisEval, DgSpace, FieldId

logger = logging.getLogger(__name__)

Triplets = Tuple[np.ndarray, np.ndarray, np.ndarray]

_BC_NAME = {FieldId.U: "u", FieldId.P: "p", FieldId.T: "T"}


# Local building blocks

def _triplets(rows: np.ndarray, cols: np.ndarray, local: np.ndarray) -> Triplets:
    return (np.repeat(rows, len(cols)), np.tile(cols, len(rows)), local.ravel())


def _to_matrix(parts: Sequence[Triplets], shape: Tuple[int, int]) -> sparse.csr_matrix:
    parts = [p for p in parts if len(p[0])]
    if not parts:
        return sparse.csr_matrix(shape)
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    return sparse.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()


def _symmetrize(matrix: sparse.csr_matrix) -> sparse.csr_matrix:
    return (0.5 * (matrix + matrix.T)).tocsr()


def vector_basis(basis: BasisEval) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vector-valued functions φ_a e_k from a scalar basis, ordered x-components first

    Returns:
        values (n_points, 2n, 2) and gradients (n_points, 2n, 2, 2) with [.., i, j] = ∂_j v_i
    """
    nq, n = basis.values.shape
    values = np.zeros((nq, 2 * n, 2))
    grads = np.zeros((nq, 2 * n, 2, 2))
    for k in range(2):
        values[:, k * n:(k + 1) * n, k] = basis.values
        grads[:, k * n:(k + 1) * n, k, :] = basis.gradients
    return values, grads


def _strain(grads: np.ndarray) -> np.ndarray:
    return 0.5 * (grads + np.swapaxes(grads, -1, -2))


def _sym_outer(values: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """v ⊙ n for values (..., 2)"""
    outer = values[..., :, None] * normal[None, None, None, :]
    return 0.5 * (outer + np.swapaxes(outer, -1, -2))


def _gram(weights: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Σ_q w_q left[q, a, c] right[q, b, c]"""
    return np.einsum("q,qac,qbc->ab", weights, left, right)


def _sip_kernel(weights: np.ndarray, jumps: List[np.ndarray], fluxes: List[np.ndarray],
                pen: float) -> Dict[Tuple[int, int], np.ndarray]:
    """
    Face blocks -∫{flux(trial)}·⟦test⟧ - ∫⟦trial⟧·{flux(test)} + pen ∫⟦trial⟧·⟦test⟧

    jumps/fluxes hold one (n_points, n_local, n_comp) array per incident side,
    fluxes already including the averaging factor.
    """
    blocks = {}
    for i in range(len(jumps)):
        for j in range(len(jumps)):
            blocks[(i, j)] = (-_gram(weights, jumps[i], fluxes[j])
                              - _gram(weights, fluxes[i], jumps[j])
                              + pen * _gram(weights, jumps[i], jumps[j]))
    return blocks


class FaceCondition:
    """How a face enters the forms of one field"""
    INTERIOR = "interior"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    ROBIN = "robin"


def face_condition(space: DgSpace, bcs: Optional[BoundaryConditions], f: int,
                   fid: FieldId) -> Tuple[str, object]:
    """Classify a face for a field; without bcs every boundary face is homogeneous Dirichlet"""
    face = space.mesh.faces[f]
    if face.is_interior:
        return FaceCondition.INTERIOR, None
    if bcs is None:
        return FaceCondition.DIRICHLET, None
    table = bcs.for_field(_BC_NAME[fid])
    try:
        cond = table[face.tag]
    except KeyError as e:
        raise AssemblyError(f"no {_BC_NAME[fid]} boundary condition on tag {face.tag}",
                            {"face": f}) from e
    if isinstance(cond, Dirichlet):
        return FaceCondition.DIRICHLET, cond
    if isinstance(cond, Neumann):
        return FaceCondition.NEUMANN, cond
    if isinstance(cond, Robin):
        return FaceCondition.ROBIN, cond
    raise AssemblyError(f"unknown boundary condition {cond!r}")


def _face_sides(space: DgSpace, f: int) -> List[int]:
    face = space.mesh.faces[f]
    return [face.cell_plus] if not face.is_interior else [face.cell_plus, face.cell_minus]


def _scatter_face(space: DgSpace, f: int, row_field: FieldId, col_field: FieldId,
                  blocks: Dict[Tuple[int, int], np.ndarray]) -> List[Triplets]:
    sides = _face_sides(space, f)
    out = []
    for (i, j), local in blocks.items():
        out.append(_triplets(space.cell_dofs(row_field, sides[i]),
                             space.cell_dofs(col_field, sides[j]), local))
    return out


# Diffusion and elasticity

_DIFFUSION_KIND = {FieldId.T: PenaltyKind.HEAT, FieldId.P: PenaltyKind.FLOW}


def _tensor(coeffs: TpeCoefficients, fid: FieldId, c: int) -> np.ndarray:
    return coeffs.Theta_cell(c) if fid == FieldId.T else coeffs.K_cell(c)


def assemble_diffusion(fid: FieldId, space: DgSpace, coeffs: TpeCoefficients,
                       penalties: PenaltyParams,
                       bcs: Optional[BoundaryConditions] = None) -> sparse.csr_matrix:
    """
    Symmetric interior penalty matrix of (Θ∇T, ∇S) (fid = T) or (K∇p, ∇q) (fid = p)

    Neumann and Robin faces carry no SIP terms; Robin faces add γ∫TS.
    """
    if fid not in _DIFFUSION_KIND:
        raise AssemblyError(f"diffusion is defined for p and T, not {fid.value}")
    kind = _DIFFUSION_KIND[fid]
    mesh = space.mesh

    def cell_part(c: int) -> List[Triplets]:
        rule = space.cell_rule(c)
        basis = space.cell_basis(c, fid)
        local = np.einsum("q,qad,de,qbe->ab", rule.weights, basis.gradients,
                          _tensor(coeffs, fid, c), basis.gradients)
        dofs = space.cell_dofs(fid, c)
        return [_triplets(dofs, dofs, local)]

    def face_part(f: int) -> List[Triplets]:
        face = mesh.faces[f]
        cond, data = face_condition(space, bcs, f, fid)
        rule = space.face_eval(f).rule
        plus, minus = space.face_basis(f, fid)
        n = np.asarray(face.normal)
        if cond == FaceCondition.NEUMANN:
            return []
        if cond == FaceCondition.ROBIN:
            local = data.gamma * _gram(rule.weights, plus.values[..., None], plus.values[..., None])
            return _scatter_face(space, f, fid, fid, {(0, 0): local})
        pen = penalty(face, kind, space, coeffs, penalties)
        if cond == FaceCondition.INTERIOR:
            tn_plus = _tensor(coeffs, fid, face.cell_plus) @ n
            tn_minus = _tensor(coeffs, fid, face.cell_minus) @ n
            jumps = [plus.values[..., None], -minus.values[..., None]]
            fluxes = [0.5 * (plus.gradients @ tn_plus)[..., None],
                      0.5 * (minus.gradients @ tn_minus)[..., None]]
        else:
            tn = _tensor(coeffs, fid, face.cell_plus) @ n
            jumps = [plus.values[..., None]]
            fluxes = [(plus.gradients @ tn)[..., None]]
        return _scatter_face(space, f, fid, fid, _sip_kernel(rule.weights, jumps, fluxes, pen))

    size = space.n_field_dofs(fid)
    parts = _collect(cell_part, face_part, mesh.n_cells, mesh.n_faces)
    return _symmetrize(_to_matrix(parts, (size, size)))


def _elastic_flux(space: DgSpace, coeffs: TpeCoefficients, c: int, basis: BasisEval,
                  factor: float) -> np.ndarray:
    _, grads = vector_basis(basis)
    return (factor * 2.0 * coeffs.mu_cell(c) * _strain(grads)).reshape(grads.shape[0], grads.shape[1], 4)


def _elastic_jump(basis: BasisEval, normal: np.ndarray, sign: float) -> np.ndarray:
    values, _ = vector_basis(basis)
    jump = sign * _sym_outer(values, normal)
    return jump.reshape(values.shape[0], values.shape[1], 4)


def assemble_elasticity(space: DgSpace, coeffs: TpeCoefficients, penalties: PenaltyParams,
                        bcs: Optional[BoundaryConditions] = None) -> sparse.csr_matrix:
    """Symmetric interior penalty matrix of (2μ ε(u), ε(v)); traction faces carry no face terms"""
    fid = FieldId.U
    mesh = space.mesh

    def cell_part(c: int) -> List[Triplets]:
        rule = space.cell_rule(c)
        _, grads = vector_basis(space.cell_basis(c, fid))
        eps = _strain(grads)
        local = 2.0 * coeffs.mu_cell(c) * np.einsum("q,qaij,qbij->ab", rule.weights, eps, eps)
        dofs = space.cell_dofs(fid, c)
        return [_triplets(dofs, dofs, local)]

    def face_part(f: int) -> List[Triplets]:
        face = mesh.faces[f]
        cond, _ = face_condition(space, bcs, f, fid)
        if cond == FaceCondition.NEUMANN:
            return []
        rule = space.face_eval(f).rule
        plus, minus = space.face_basis(f, fid)
        n = np.asarray(face.normal)
        pen = penalty(face, PenaltyKind.ELASTICITY, space, coeffs, penalties)
        if cond == FaceCondition.INTERIOR:
            jumps = [_elastic_jump(plus, n, 1.0), _elastic_jump(minus, n, -1.0)]
            fluxes = [_elastic_flux(space, coeffs, face.cell_plus, plus, 0.5),
                      _elastic_flux(space, coeffs, face.cell_minus, minus, 0.5)]
        else:
            jumps = [_elastic_jump(plus, n, 1.0)]
            fluxes = [_elastic_flux(space, coeffs, face.cell_plus, plus, 1.0)]
        return _scatter_face(space, f, fid, fid, _sip_kernel(rule.weights, jumps, fluxes, pen))

    size = space.n_field_dofs(fid)
    parts = _collect(cell_part, face_part, mesh.n_cells, mesh.n_faces)
    return _symmetrize(_to_matrix(parts, (size, size)))


# Coupling and stabilization

def assemble_coupling_B(space: DgSpace, bcs: Optional[BoundaryConditions] = None) -> sparse.csr_matrix:
    """
    ℬ_h(φ, v) = -(φ, ∇_h·v) + Σ_F ∫ {φ}⟦v⟧_n

    Rows: displacement test functions; columns: φ trial functions. Traction
    faces are left out of the face sum.
    """
    mesh = space.mesh

    def cell_part(c: int) -> List[Triplets]:
        rule = space.cell_rule(c)
        ub = space.cell_basis(c, FieldId.U)
        _, grads = vector_basis(ub)
        div = np.trace(grads, axis1=-2, axis2=-1)
        phi = space.cell_basis(c, FieldId.PHI).values
        local = -np.einsum("q,qa,qb->ab", rule.weights, div, phi)
        return [_triplets(space.cell_dofs(FieldId.U, c), space.cell_dofs(FieldId.PHI, c), local)]

    def face_part(f: int) -> List[Triplets]:
        face = mesh.faces[f]
        cond, _ = face_condition(space, bcs, f, FieldId.U)
        if cond == FaceCondition.NEUMANN:
            return []
        rule = space.face_eval(f).rule
        n = np.asarray(face.normal)
        u_sides = [b for b in space.face_basis(f, FieldId.U) if b is not None]
        phi_sides = [b for b in space.face_basis(f, FieldId.PHI) if b is not None]
        avg = 0.5 if face.is_interior else 1.0
        blocks = {}
        for i, ub in enumerate(u_sides):
            values, _ = vector_basis(ub)
            jump_n = (1.0 if i == 0 else -1.0) * (values @ n)
            for j, pb in enumerate(phi_sides):
                blocks[(i, j)] = avg * np.einsum("q,qa,qb->ab", rule.weights, jump_n, pb.values)
        return _scatter_face(space, f, FieldId.U, FieldId.PHI, blocks)

    shape = (space.n_field_dofs(FieldId.U), space.n_field_dofs(FieldId.PHI))
    return _to_matrix(_collect(cell_part, face_part, mesh.n_cells, mesh.n_faces), shape)


def assemble_pstab_D(space: DgSpace, penalties: PenaltyParams,
                     coeffs: Optional[TpeCoefficients] = None) -> sparse.csr_matrix:
    """𝒟_h(φ, ψ) = Σ_{F interior} ∫ ϱ⟦φ⟧·⟦ψ⟧"""
    mesh = space.mesh
    fid = FieldId.PHI

    def face_part(f: int) -> List[Triplets]:
        face = mesh.faces[f]
        if not face.is_interior:
            return []
        rule = space.face_eval(f).rule
        plus, minus = space.face_basis(f, fid)
        rho = penalty(face, PenaltyKind.PSTAB, space, coeffs, penalties)
        jumps = [plus.values[..., None], -minus.values[..., None]]
        blocks = {(i, j): rho * _gram(rule.weights, jumps[i], jumps[j])
                  for i in range(2) for j in range(2)}
        return _scatter_face(space, f, fid, fid, blocks)

    size = space.n_field_dofs(fid)
    return _symmetrize(_to_matrix(_collect(None, face_part, mesh.n_cells, mesh.n_faces), (size, size)))


def _cross_mass(space: DgSpace, row: FieldId, col: FieldId, scale: float) -> sparse.csr_matrix:
    """scale ∫ q r over every cell for scalar fields row, col"""
    def cell_part(c: int) -> List[Triplets]:
        rule = space.cell_rule(c)
        a = space.cell_basis(c, row).values
        b = space.cell_basis(c, col).values
        local = scale * np.einsum("q,qa,qb->ab", rule.weights, a, b)
        return [_triplets(space.cell_dofs(row, c), space.cell_dofs(col, c), local)]

    shape = (space.n_field_dofs(row), space.n_field_dofs(col))
    return _to_matrix(_collect(cell_part, None, space.mesh.n_cells, 0), shape)


def mass_coupling_weights(coeffs: TpeCoefficients) -> Dict[Tuple[FieldId, FieldId], float]:
    """
    Pointwise weights of ℳ_h over (p, T, φ):

        b0(p - T, q - S) + (a0 - b0)(T, S) + (c0 - b0)(p, q) + λ⁻¹(φ + αp + βT, ψ + αq + βS)
    """
    a0, b0, c0 = coeffs.a0, coeffs.b0, coeffs.c0
    al, be, inv = coeffs.alpha, coeffs.beta, 1.0 / coeffs.lam
    P, T, PHI = FieldId.P, FieldId.T, FieldId.PHI
    return {
        (P, P): c0 + al * al * inv,
        (P, T): -b0 + al * be * inv,
        (T, P): -b0 + al * be * inv,
        (T, T): a0 + be * be * inv,
        (PHI, PHI): inv,
        (P, PHI): al * inv,
        (PHI, P): al * inv,
        (T, PHI): be * inv,
        (PHI, T): be * inv,
    }


def assemble_mass_coupling(space: DgSpace, coeffs: TpeCoefficients) -> Dict[Tuple[FieldId, FieldId], sparse.csr_matrix]:
    """ℳ_h blocks over (p, T, φ); symmetric pairs are exact transposes"""
    blocks: Dict[Tuple[FieldId, FieldId], sparse.csr_matrix] = {}
    for (row, col), w in mass_coupling_weights(coeffs).items():
        if (col, row) in blocks:
            blocks[(row, col)] = blocks[(col, row)].T.tocsr()
        elif row == col:
            blocks[(row, col)] = _symmetrize(_cross_mass(space, row, col, w))
        else:
            blocks[(row, col)] = _cross_mass(space, row, col, w)
    return blocks


def assemble_l2_mass(space: DgSpace, fid: FieldId) -> sparse.csr_matrix:
    """Field L² mass matrix (identity up to rounding for orthonormal bases)"""
    if fid != FieldId.U:
        return _symmetrize(_cross_mass(space, fid, fid, 1.0))

    def cell_part(c: int) -> List[Triplets]:
        rule = space.cell_rule(c)
        values, _ = vector_basis(space.cell_basis(c, fid))
        local = _gram(rule.weights, values, values)
        dofs = space.cell_dofs(fid, c)
        return [_triplets(dofs, dofs, local)]

    size = space.n_field_dofs(fid)
    return _symmetrize(_to_matrix(_collect(cell_part, None, space.mesh.n_cells, 0), (size, size)))


def assemble_convection(space: DgSpace, coeffs: TpeCoefficients,
                        temperature: Optional[np.ndarray] = None,
                        eta: Optional[Callable] = None,
                        pressure: Optional[np.ndarray] = None,
                        linearization: str = "temperature_gradient") -> sparse.csr_matrix:
    """
    Convective coupling, volume terms only

    temperature_gradient: block (T, p) of -(K∇p, η S), η = c_f ∇T with T the
        lagged temperature vector, or η(x, y) given directly (linearized form)
    darcy_flux: block (T, T) of -(η_p·∇T, S), η_p = c_f K∇p with p the
        lagged pressure vector

    Returns a zero matrix of the right shape when c_f = 0 and no η is given.
    """
    mesh = space.mesh
    n_T = space.n_field_dofs(FieldId.T)
    if linearization == "darcy_flux":
        col_field = FieldId.T
        if pressure is None and eta is None:
            raise AssemblyError("darcy-flux linearization needs the lagged pressure")
    elif linearization == "temperature_gradient":
        col_field = FieldId.P
        if temperature is None and eta is None:
            raise AssemblyError("convection needs the lagged temperature or η")
    else:
        raise AssemblyError(f"unknown linearization: {linearization}")
    shape = (n_T, space.n_field_dofs(col_field))
    if eta is None and coeffs.c_f == 0.0:
        return sparse.csr_matrix(shape)

    def cell_part(c: int) -> List[Triplets]:
        rule = space.cell_rule(c)
        basis_T = space.cell_basis(c, FieldId.T)
        if eta is not None:
            field_vec = np.asarray(eta(rule.points[:, 0], rule.points[:, 1]), dtype=float)
            field_vec = np.broadcast_to(field_vec, (len(rule.weights), 2))
        elif linearization == "temperature_gradient":
            _, grad_T = space.evaluate(FieldId.T, temperature, c, basis_T)
            field_vec = coeffs.c_f * grad_T
        else:
            _, grad_p = space.evaluate(FieldId.P, pressure, c, space.cell_basis(c, FieldId.P))
            field_vec = coeffs.c_f * grad_p @ coeffs.K_cell(c).T
        if linearization == "temperature_gradient":
            # -(η·K∇p_b) S_a
            trial = np.einsum("qbd,de,qe->qb", space.cell_basis(c, FieldId.P).gradients,
                              coeffs.K_cell(c), field_vec)
        else:
            # -(η_p·∇T_b) S_a
            trial = np.einsum("qbd,qd->qb", basis_T.gradients, field_vec)
        local = -np.einsum("q,qa,qb->ab", rule.weights, basis_T.values, trial)
        return [_triplets(space.cell_dofs(FieldId.T, c), space.cell_dofs(col_field, c), local)]

    return _to_matrix(_collect(cell_part, None, mesh.n_cells, 0), shape)


def assemble_dg_norm_matrix(fid: FieldId, space: DgSpace, coeffs: TpeCoefficients,
                            penalties: PenaltyParams) -> sparse.csr_matrix:
    """
    Gram matrix of the DG norm over all faces

        T: ‖√Θ ∇_h S‖² + Σ_F σ‖⟦S⟧‖²_F
        p: ‖√K ∇_h q‖² + Σ_F ξ‖⟦q⟧‖²_F
        u: ‖√(2μ) ε_h(v)‖² + Σ_F ζ‖⟦v⟧‖²_F
    """
    mesh = space.mesh
    kind = {FieldId.T: PenaltyKind.HEAT, FieldId.P: PenaltyKind.FLOW,
            FieldId.U: PenaltyKind.ELASTICITY}.get(fid)
    if kind is None:
        raise AssemblyError("DG norms are defined for u, p and T")

    def cell_part(c: int) -> List[Triplets]:
        rule = space.cell_rule(c)
        basis = space.cell_basis(c, fid)
        if fid == FieldId.U:
            _, grads = vector_basis(basis)
            eps = _strain(grads)
            local = 2.0 * coeffs.mu_cell(c) * np.einsum("q,qaij,qbij->ab", rule.weights, eps, eps)
        else:
            local = np.einsum("q,qad,de,qbe->ab", rule.weights, basis.gradients,
                              _tensor(coeffs, fid, c), basis.gradients)
        dofs = space.cell_dofs(fid, c)
        return [_triplets(dofs, dofs, local)]

    def face_part(f: int) -> List[Triplets]:
        face = mesh.faces[f]
        rule = space.face_eval(f).rule
        n = np.asarray(face.normal)
        sides = [b for b in space.face_basis(f, fid) if b is not None]
        signs = [1.0, -1.0]
        if fid == FieldId.U:
            jumps = [_elastic_jump(b, n, signs[i]) for i, b in enumerate(sides)]
        else:
            jumps = [signs[i] * b.values[..., None] for i, b in enumerate(sides)]
        pen = penalty(face, kind, space, coeffs, penalties)
        blocks = {(i, j): pen * _gram(rule.weights, jumps[i], jumps[j])
                  for i in range(len(jumps)) for j in range(len(jumps))}
        return _scatter_face(space, f, fid, fid, blocks)

    size = space.n_field_dofs(fid)
    return _symmetrize(_to_matrix(_collect(cell_part, face_part, mesh.n_cells, mesh.n_faces), (size, size)))


def _collect(cell_fn: Optional[Callable], face_fn: Optional[Callable],
             n_cells: int, n_faces: int) -> List[Triplets]:
    parts: List[Triplets] = []
    if cell_fn is not None:
        for chunk in ordered_map(cell_fn, list(range(n_cells))):
            parts.extend(chunk)
    if face_fn is not None:
        for chunk in ordered_map(face_fn, list(range(n_faces))):
            parts.extend(chunk)
    return parts


# Block operator

Block = Tuple[FieldId, FieldId]


@dataclass
class BlockOperator:
    """
    Field-block operators of the semi-discrete system

    Attributes:
        space: Discrete space the blocks live on
        mass: Mass-like blocks (multiplied by the time derivative)
        stiffness: Stiffness-like blocks without the convection block
    """
    space: DgSpace
    mass: Dict[Block, sparse.csr_matrix] = field(default_factory=dict)
    stiffness: Dict[Block, sparse.csr_matrix] = field(default_factory=dict)

    def _monolithic(self, blocks: Dict[Block, sparse.spmatrix]) -> sparse.csr_matrix:
        grid = []
        for row in FIELD_ORDER:
            line = []
            for col in FIELD_ORDER:
                b = blocks.get((row, col))
                if b is None and row == col:
                    n = self.space.n_field_dofs(row)
                    b = sparse.csr_matrix((n, n))
                line.append(b)
            grid.append(line)
        return sparse.bmat(grid, format="csr")

    def mass_matrix(self) -> sparse.csr_matrix:
        return self._monolithic(self.mass)

    def stiffness_matrix(self, convection: Optional[sparse.spmatrix] = None,
                         block: Block = (FieldId.T, FieldId.P)) -> sparse.csr_matrix:
        """Monolithic stiffness-like operator with an optional convection block added"""
        blocks = dict(self.stiffness)
        if convection is not None and convection.nnz:
            base = blocks.get(block)
            blocks[block] = convection if base is None else (base + convection).tocsr()
        return self._monolithic(blocks)

    def mass_energy_matrix(self) -> sparse.csr_matrix:
        """ℳ_h coupling plus 𝒟_h, without the ℬ_h(ψ, u̇) block"""
        return self._monolithic({k: v for k, v in self.mass.items() if k != (FieldId.PHI, FieldId.U)})

    def energy_matrix(self) -> sparse.csr_matrix:
        """Symmetric part of the mass-like operator plus 𝒜_h^e: ℳ_h(X,X) + 𝒜_h^e(u,u)"""
        blocks = {k: v for k, v in self.mass.items() if k != (FieldId.PHI, FieldId.U)}
        blocks[(FieldId.U, FieldId.U)] = self.stiffness[(FieldId.U, FieldId.U)]
        return self._monolithic(blocks)

    def nnz_summary(self) -> Dict[str, int]:
        out = {}
        for label, blocks in (("mass", self.mass), ("stiffness", self.stiffness)):
            for (r, c), m in blocks.items():
                out[f"{label}[{r.value},{c.value}]"] = int(m.nnz)
        return out


def assemble_operators(space: DgSpace, problem: Problem, penalties: PenaltyParams) -> BlockOperator:
    """
    Assemble every time-independent block

    Raises:
        AssemblyError: A boundary tag has no condition for some field
    """
    coeffs = problem.coefficients
    bcs = problem.bcs
    bcs.check_tags(set(space.mesh.boundary_tags.values()))

    B = assemble_coupling_B(space, bcs)
    op = BlockOperator(space)
    op.mass.update(assemble_mass_coupling(space, coeffs))
    op.mass[(FieldId.PHI, FieldId.PHI)] = (op.mass[(FieldId.PHI, FieldId.PHI)]
                                           + assemble_pstab_D(space, penalties, coeffs)).tocsr()
    op.mass[(FieldId.PHI, FieldId.U)] = B.T.tocsr()

    op.stiffness[(FieldId.U, FieldId.U)] = assemble_elasticity(space, coeffs, penalties, bcs)
    op.stiffness[(FieldId.U, FieldId.PHI)] = (-B).tocsr()
    op.stiffness[(FieldId.P, FieldId.P)] = assemble_diffusion(FieldId.P, space, coeffs, penalties, bcs)
    op.stiffness[(FieldId.T, FieldId.T)] = assemble_diffusion(FieldId.T, space, coeffs, penalties, bcs)
    logger.info(f"assembled operators: {space.n_dofs} dofs, "
                f"{sum(m.nnz for m in op.mass.values()) + sum(m.nnz for m in op.stiffness.values())} nonzeros")
    for name, nnz in op.nnz_summary().items():
        logger.debug(f"  {name}: nnz={nnz}")
    return op


# Loads

@dataclass
class LoadVector:
    """
    Right-hand side at one time

    Attributes:
        fields: Stiffness-like load per field: sources plus weak boundary data
        lift: Mass-like load on the φ rows: ∫ψ g_u·n over Dirichlet displacement faces
    """
    space: DgSpace
    fields: Dict[FieldId, np.ndarray]
    lift: np.ndarray

    def vector(self) -> np.ndarray:
        return self.space.join(self.fields)

    def mass_vector(self) -> np.ndarray:
        return self.space.join({FieldId.PHI: self.lift})


def _volume_load(space: DgSpace, source: Callable, fid: FieldId, t: float,
                 use_error_rule: bool = False) -> np.ndarray:
    out = np.zeros(space.n_field_dofs(fid))
    n = space.n_basis(fid)
    for c in range(space.mesh.n_cells):
        if use_error_rule:
            rule, full = space.error_rule(c)
            values = full.values[:, :n]
        else:
            rule = space.cell_rule(c)
            values = space.cell_basis(c, fid).values
        data = np.asarray(source(rule.points[:, 0], rule.points[:, 1], t), dtype=float)
        if fid == FieldId.U:
            data = np.broadcast_to(data, (len(rule.weights), 2))
            out[space.cell_dofs(fid, c)] = (values.T @ (rule.weights[:, None] * data)).T.ravel()
        else:
            data = np.broadcast_to(data, (len(rule.weights),))
            out[space.cell_dofs(fid, c)] = values.T @ (rule.weights * data)
    return out


def _boundary_load(space: DgSpace, problem: Problem, fid: FieldId, t: float,
                   penalties: PenaltyParams, out: np.ndarray) -> None:
    coeffs = problem.coefficients
    mesh = space.mesh
    for f in mesh.boundary_faces:
        face = mesh.faces[f]
        cond, data = face_condition(space, problem.bcs, f, fid)
        rule = space.face_eval(f).rule
        plus, _ = space.face_basis(f, fid)
        x, y = rule.points[:, 0], rule.points[:, 1]
        n = np.asarray(face.normal)
        c = face.cell_plus
        dofs = space.cell_dofs(fid, c)
        w = rule.weights
        if fid == FieldId.U:
            values, grads = vector_basis(plus)
            if cond == FaceCondition.NEUMANN:
                h = np.broadcast_to(np.asarray(data.flux(x, y, t), dtype=float), (len(w), 2))
                out[dofs] += np.einsum("q,qak,qk->a", w, values, h)
            elif cond == FaceCondition.DIRICHLET:
                g = np.broadcast_to(np.asarray(data.value(x, y, t), dtype=float), (len(w), 2))
                g_jump = _sym_outer(g[:, None, :], n)[:, 0]
                stress = 2.0 * coeffs.mu_cell(c) * _strain(grads)
                zeta = penalty(face, PenaltyKind.ELASTICITY, space, coeffs, penalties)
                v_jump = _sym_outer(values, n)
                out[dofs] += (-np.einsum("qij,qaij,q->a", g_jump, stress, w)
                              + zeta * np.einsum("qij,qaij,q->a", g_jump, v_jump, w))
            continue
        if cond == FaceCondition.NEUMANN:
            h = np.broadcast_to(np.asarray(data.flux(x, y, t), dtype=float), (len(w),))
            out[dofs] += plus.values.T @ (w * h)
        elif cond == FaceCondition.ROBIN:
            amb = np.broadcast_to(np.asarray(data.ambient(x, y, t), dtype=float), (len(w),))
            out[dofs] += data.gamma * (plus.values.T @ (w * amb))
        elif cond == FaceCondition.DIRICHLET:
            g = np.broadcast_to(np.asarray(data.value(x, y, t), dtype=float), (len(w),))
            kind = _DIFFUSION_KIND[fid]
            pen = penalty(face, kind, space, coeffs, penalties)
            flux = plus.gradients @ (_tensor(coeffs, fid, c) @ n)
            out[dofs] += -flux.T @ (w * g) + pen * (plus.values.T @ (w * g))


def _phi_lift(space: DgSpace, problem: Problem, t: float) -> np.ndarray:
    out = np.zeros(space.n_field_dofs(FieldId.PHI))
    mesh = space.mesh
    for f in mesh.boundary_faces:
        cond, data = face_condition(space, problem.bcs, f, FieldId.U)
        if cond != FaceCondition.DIRICHLET:
            continue
        face = mesh.faces[f]
        rule = space.face_eval(f).rule
        psi, _ = space.face_basis(f, FieldId.PHI)
        g = np.broadcast_to(np.asarray(data.value(rule.points[:, 0], rule.points[:, 1], t),
                                       dtype=float), (len(rule.weights), 2))
        gn = g @ np.asarray(face.normal)
        out[space.cell_dofs(FieldId.PHI, face.cell_plus)] += psi.values.T @ (rule.weights * gn)
    return out


def assemble_load(space: DgSpace, problem: Problem, t: float, penalties: PenaltyParams,
                  use_error_rule: bool = False) -> LoadVector:
    """
    F(Y) = (H, S) + (g, q) + (f, v) plus weak boundary data at time t

    Dirichlet faces add the SIP lifting -∫ g_D (κ∇S·n) + pen ∫ g_D S (and its
    elastic analogue), Neumann faces ∫ h S, Robin faces γ ∫ T_amb S.
    """
    fields = {
        FieldId.U: _volume_load(space, problem.f, FieldId.U, t, use_error_rule),
        FieldId.P: _volume_load(space, problem.g, FieldId.P, t, use_error_rule),
        FieldId.T: _volume_load(space, problem.H, FieldId.T, t, use_error_rule),
        FieldId.PHI: np.zeros(space.n_field_dofs(FieldId.PHI)),
    }
    for fid in (FieldId.U, FieldId.P, FieldId.T):
        _boundary_load(space, problem, fid, t, penalties, fields[fid])
    return LoadVector(space, fields, _phi_lift(space, problem, t))


def load_quadrature_drift(space: DgSpace, problem: Problem, t: float,
                          penalties: PenaltyParams, threshold: float = 1e-8) -> float:
    """
    Relative change of the volume load when the quadrature order grows by two

    Logs a warning above threshold; used as a diagnostic, never raises.
    """
    base = assemble_load(space, problem, t, penalties).vector()
    fine = assemble_load(space, problem, t, penalties, use_error_rule=True).vector()
    scale = max(np.linalg.norm(fine), np.finfo(float).tiny)
    drift = float(np.linalg.norm(fine - base) / scale)
    if drift > threshold:
        logger.warning(f"load quadrature may be insufficient: relative change {drift:.2e} at t={t:g}")
    return drift


def dump_coo(matrix: sparse.spmatrix, path: Path) -> None:
    """Write 'row col value' lines (full precision) for cross-checking"""
    coo = sparse.coo_matrix(matrix)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"% {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")
