"""
Broken Polynomial Spaces - per-element orthonormal bases and DOF maps

Every cell carries scaled monomials ((x - c_x)/s_x)^a ((y - c_y)/s_y)^b with
c the bounding-box centre and s its half widths, orthonormalized in the cell's
L² inner product. Monomials are taken in graded order, so the first
local_dim(k) functions of a degree-L basis span ℙ^k: every field reads its
basis as a prefix of one shared per-cell basis.

Why orthonormal?
- Element mass matrices are the identity (L² projection is a weighted sum)
- Conditioning of the assembled system does not depend on cell shape
- Lower-degree fields come for free as prefixes

Global unknown layout: blocks u, p, T, φ in that order; inside a block cells
in index order; inside a displacement cell the x-component functions come
before the y-component ones.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import SpaceError
from .mesh import ElementGeometry, PolyMesh
from .parallel import ordered_map
from .quadrature import MAX_ORDER, QuadRule, element_quadrature, face_quadrature

logger = logging.getLogger(__name__)


class FieldId(Enum):
    """Unknowns of the four-field system in global block order"""
    U = "u"
    P = "p"
    T = "T"
    PHI = "phi"


FIELD_ORDER: Tuple[FieldId, ...] = (FieldId.U, FieldId.P, FieldId.T, FieldId.PHI)


def local_dim(degree: int) -> int:
    """Dimension of ℙ^degree in two variables"""
    if degree < 0:
        raise SpaceError("polynomial degree must be >= 0", {"degree": degree})
    return (degree + 1) * (degree + 2) // 2


def monomial_exponents(degree: int) -> np.ndarray:
    """Graded exponents (a, b): (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ..."""
    return np.array([(k - j, j) for k in range(degree + 1) for j in range(k + 1)], dtype=int)


@dataclass
class BasisEval:
    """Basis values (n_points, n_basis) and gradients (n_points, n_basis, 2)"""
    values: np.ndarray
    gradients: np.ndarray

    def truncate(self, n: int) -> "BasisEval":
        return BasisEval(self.values[:, :n], self.gradients[:, :n, :])


@dataclass
class ElementBasis:
    """
    Orthonormal basis of one cell

    Attributes:
        center: Bounding-box centre
        scale: Bounding-box half widths
        degree: Highest polynomial degree
        coefficients: Monomial-to-basis matrix, basis_i = Σ_j coefficients[j, i] monomial_j
    """
    center: np.ndarray
    scale: np.ndarray
    degree: int
    coefficients: np.ndarray

    def evaluate(self, points: np.ndarray) -> BasisEval:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xi = (points - self.center) / self.scale
        exps = monomial_exponents(self.degree)
        powers_x = xi[:, 0:1] ** np.arange(self.degree + 1)
        powers_y = xi[:, 1:2] ** np.arange(self.degree + 1)
        a, b = exps[:, 0], exps[:, 1]
        mono = powers_x[:, a] * powers_y[:, b]
        dx = np.zeros_like(mono)
        dy = np.zeros_like(mono)
        mask = a > 0
        dx[:, mask] = a[mask] * powers_x[:, a[mask] - 1] * powers_y[:, b[mask]] / self.scale[0]
        mask = b > 0
        dy[:, mask] = b[mask] * powers_x[:, a[mask]] * powers_y[:, b[mask] - 1] / self.scale[1]
        values = mono @ self.coefficients
        gradients = np.stack([dx @ self.coefficients, dy @ self.coefficients], axis=-1)
        return BasisEval(values, gradients)


def build_basis(geometry: ElementGeometry, degree: int, order: Optional[int] = None) -> ElementBasis:
    """
    Orthonormalize scaled monomials on a cell

    Modified Gram-Schmidt in the cell L² inner product with one
    re-orthogonalization pass.

    Args:
        geometry: Cell geometry (bounding box and fan triangles)
        degree: Polynomial degree
        order: Quadrature order for the Gram matrix (default 2*degree)

    Raises:
        SpaceError: Degenerate bounding box or loss of rank
    """
    lo, hi = np.asarray(geometry.bounding_box[0]), np.asarray(geometry.bounding_box[1])
    center = 0.5 * (lo + hi)
    scale = 0.5 * (hi - lo)
    if np.any(scale <= 0.0):
        raise SpaceError("degenerate bounding box", {"scale": scale.tolist()})

    n = local_dim(degree)
    raw = ElementBasis(center, scale, degree, np.eye(n))
    rule = element_quadrature(geometry, order if order is not None else 2 * degree)
    mono = raw.evaluate(rule.points).values
    gram = mono.T @ (rule.weights[:, None] * mono)

    coeffs = np.zeros((n, n))
    for j in range(n):
        v = np.zeros(n)
        v[j] = 1.0
        for _ in range(2):
            for i in range(j):
                v -= (coeffs[:, i] @ gram @ v) * coeffs[:, i]
        norm = np.sqrt(max(v @ gram @ v, 0.0))
        if norm <= 1e-12 * np.sqrt(gram[j, j]):
            raise SpaceError("local basis lost rank (quadrature order too low?)",
                             {"function": j, "degree": degree})
        coeffs[:, j] = v / norm
    return ElementBasis(center, scale, degree, coeffs)


@dataclass
class FaceEval:
    """Face rule with the traces of both incident cell bases"""
    rule: QuadRule
    plus: BasisEval
    minus: Optional[BasisEval]


class DgSpace:
    """
    Discrete spaces for (u, p, T, φ) on one mesh

    Args:
        mesh: Polygonal mesh
        degree: ℓ for p and T (and u unless degree_u is given)
        phi_degree: m for the pseudo-total pressure (default ℓ)
        degree_u: Displacement degree (default ℓ)

    Raises:
        SpaceError: ℓ < 1, m < 0, or m > degree_u + 1
    """

    def __init__(self, mesh: PolyMesh, degree: int, phi_degree: Optional[int] = None,
                 degree_u: Optional[int] = None):
        self.mesh = mesh
        self.degree = int(degree)
        self.phi_degree = int(phi_degree) if phi_degree is not None else self.degree
        self.degree_u = int(degree_u) if degree_u is not None else self.degree
        if self.degree < 1 or self.degree_u < 1:
            raise SpaceError("degrees of u, p and T must be >= 1",
                             {"degree": self.degree, "degree_u": self.degree_u})
        if self.phi_degree < 0:
            raise SpaceError("phi degree must be >= 0", {"phi_degree": self.phi_degree})
        if self.phi_degree > self.degree_u + 1:
            raise SpaceError("phi degree exceeds displacement degree + 1",
                             {"phi_degree": self.phi_degree, "degree_u": self.degree_u})

        self.max_degree = max(self.degree, self.phi_degree, self.degree_u)
        self.volume_order = min(2 * self.max_degree + 2, MAX_ORDER)
        self.face_order = min(2 * self.max_degree + 1, MAX_ORDER)
        self.error_order = min(2 * self.max_degree + 4, MAX_ORDER)

        self._local = {
            FieldId.U: 2 * local_dim(self.degree_u),
            FieldId.P: local_dim(self.degree),
            FieldId.T: local_dim(self.degree),
            FieldId.PHI: local_dim(self.phi_degree),
        }
        self._offsets: Dict[FieldId, int] = {}
        total = 0
        for fid in FIELD_ORDER:
            self._offsets[fid] = total
            total += mesh.n_cells * self._local[fid]
        self.n_dofs = total

        self.bases: List[ElementBasis] = ordered_map(
            lambda geo: build_basis(geo, self.max_degree), mesh.geometry
        )
        self._cells = ordered_map(self._prepare_cell, list(range(mesh.n_cells)))
        self._faces = ordered_map(self._prepare_face, list(range(mesh.n_faces)))
        self._error_cache: Dict[int, Tuple[QuadRule, BasisEval]] = {}
        logger.debug(
            f"DgSpace ℓ={self.degree} m={self.phi_degree} ℓ_u={self.degree_u}: "
            f"{self.n_dofs} dofs on {mesh.n_cells} cells"
        )

    def _prepare_cell(self, c: int) -> Tuple[QuadRule, BasisEval]:
        rule = element_quadrature(self.mesh.geometry[c], self.volume_order)
        return rule, self.bases[c].evaluate(rule.points)

    def _prepare_face(self, f: int) -> FaceEval:
        face = self.mesh.faces[f]
        rule = face_quadrature(face, self.face_order)
        plus = self.bases[face.cell_plus].evaluate(rule.points)
        minus = self.bases[face.cell_minus].evaluate(rule.points) if face.is_interior else None
        return FaceEval(rule, plus, minus)

    # DOF layout

    def degree_of(self, field: FieldId) -> int:
        return {FieldId.U: self.degree_u, FieldId.P: self.degree,
                FieldId.T: self.degree, FieldId.PHI: self.phi_degree}[field]

    def n_basis(self, field: FieldId) -> int:
        """Scalar basis functions per cell for the field (per component for u)"""
        return local_dim(self.degree_of(field))

    def local_size(self, field: FieldId) -> int:
        return self._local[field]

    def n_field_dofs(self, field: FieldId) -> int:
        return self.mesh.n_cells * self._local[field]

    def field_offset(self, field: FieldId) -> int:
        return self._offsets[field]

    def field_slice(self, field: FieldId) -> slice:
        start = self._offsets[field]
        return slice(start, start + self.n_field_dofs(field))

    def dof_offsets(self, field: FieldId) -> np.ndarray:
        """Offset of each cell inside the field block"""
        return np.arange(self.mesh.n_cells) * self._local[field]

    def cell_dofs(self, field: FieldId, cell: int) -> np.ndarray:
        """Field-block indices of one cell's unknowns"""
        start = cell * self._local[field]
        return np.arange(start, start + self._local[field])

    def split(self, x: np.ndarray) -> Dict[FieldId, np.ndarray]:
        return {fid: x[self.field_slice(fid)] for fid in FIELD_ORDER}

    def join(self, parts: Dict[FieldId, np.ndarray]) -> np.ndarray:
        x = np.zeros(self.n_dofs)
        for fid, vec in parts.items():
            x[self.field_slice(fid)] = vec
        return x

    # Evaluations

    def cell_rule(self, c: int) -> QuadRule:
        return self._cells[c][0]

    def cell_basis(self, c: int, field: FieldId) -> BasisEval:
        return self._cells[c][1].truncate(self.n_basis(field))

    def face_eval(self, f: int) -> FaceEval:
        return self._faces[f]

    def face_basis(self, f: int, field: FieldId) -> Tuple[BasisEval, Optional[BasisEval]]:
        fe = self._faces[f]
        n = self.n_basis(field)
        return fe.plus.truncate(n), (fe.minus.truncate(n) if fe.minus is not None else None)

    def error_rule(self, c: int) -> Tuple[QuadRule, BasisEval]:
        """Higher-order rule for errors against closed-form fields"""
        cached = self._error_cache.get(c)
        if cached is None:
            rule = element_quadrature(self.mesh.geometry[c], self.error_order)
            cached = (rule, self.bases[c].evaluate(rule.points))
            self._error_cache[c] = cached
        return cached

    def cell_coefficients(self, field: FieldId, vec: np.ndarray, c: int) -> np.ndarray:
        """Cell coefficients: (n_basis,) for scalars, (n_basis, 2) for u"""
        local = vec[self.cell_dofs(field, c)]
        if field == FieldId.U:
            return local.reshape(2, -1).T
        return local

    def evaluate(self, field: FieldId, vec: np.ndarray, c: int,
                 basis: BasisEval) -> Tuple[np.ndarray, np.ndarray]:
        """
        Values and gradients of a discrete field from a cell's basis evaluation

        Returns:
            Scalars: values (n,), gradients (n, 2).
            Displacement: values (n, 2), gradients (n, 2, 2) with [.., i, j] = ∂_j u_i.
        """
        n = self.n_basis(field)
        coeff = self.cell_coefficients(field, vec, c)
        values = basis.values[:, :n] @ coeff
        grads = np.einsum("pbd,b...->p...d", basis.gradients[:, :n, :], coeff)
        return values, grads

    def evaluate_at(self, field: FieldId, vec: np.ndarray, c: int,
                    points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Evaluate a discrete field at arbitrary points of cell c"""
        return self.evaluate(field, vec, c, self.bases[c].evaluate(points))

    def project(self, field: FieldId, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """
        Element-wise L² projection of a closed-form field

        Args:
            field: Target field
            func: f(x, y) returning (n,) values, or (n, 2) for u
        """
        n = self.n_basis(field)
        out = np.zeros(self.n_field_dofs(field))
        for c in range(self.mesh.n_cells):
            rule, basis = self.error_rule(c)
            vals = np.asarray(func(rule.points[:, 0], rule.points[:, 1]), dtype=float)
            if field == FieldId.U:
                vals = np.broadcast_to(vals, (len(rule.weights), 2))
                coeff = basis.values[:, :n].T @ (rule.weights[:, None] * vals)
                out[self.cell_dofs(field, c)] = coeff.T.ravel()
            else:
                vals = np.broadcast_to(vals, (len(rule.weights),))
                out[self.cell_dofs(field, c)] = basis.values[:, :n].T @ (rule.weights * vals)
        return out
