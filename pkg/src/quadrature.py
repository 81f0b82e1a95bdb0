"""
Quadrature on polygons and segments

Cells are integrated through their fan sub-triangulation. Each triangle uses a
collapsed (Duffy) product of Gauss-Jacobi and Gauss-Legendre points, which
reaches any total degree with positive weights; faces use Gauss-Legendre.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import QuadratureError
from .mesh import ElementGeometry, Face

logger = logging.getLogger(__name__)

MAX_ORDER = 20


@dataclass(frozen=True)
class QuadRule:
    """Points (n, 2) and positive weights (n,) on some integration domain"""
    points: np.ndarray
    weights: np.ndarray

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate values sampled at the points (leading axis = points)"""
        return np.tensordot(self.weights, values, axes=(0, 0))


def _n_points(order: int) -> int:
    if order < 0:
        raise QuadratureError("quadrature order must be >= 0", {"order": order})
    if order > MAX_ORDER:
        raise QuadratureError(f"quadrature order capped at {MAX_ORDER}", {"order": order})
    return max(1, math.ceil((order + 1) / 2))


@lru_cache(maxsize=None)
def _gauss_legendre01(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def reference_triangle_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Collapsed rule on the triangle (0,0)-(1,0)-(0,1)

    Returns:
        (points (n, 2), weights (n,)) with weights summing to 1/2
    """
    n = _n_points(order)
    xl, wl = roots_legendre(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    s = (xl + 1.0) / 2.0
    r = (xj + 1.0) / 2.0
    # 2 from the Legendre map and 4 from the Jacobi(1,0) map
    weights = np.outer(wj, wl).ravel() / 8.0
    x = np.outer(r, np.ones_like(s)).ravel()
    y = np.outer(1.0 - r, s).ravel()
    return np.column_stack([x, y]), weights


def triangle_rule(triangle: np.ndarray, order: int) -> QuadRule:
    """Rule on an arbitrary triangle given as a (3, 2) array"""
    ref_pts, ref_w = reference_triangle_rule(order)
    v0, v1, v2 = triangle
    jac = np.column_stack([v1 - v0, v2 - v0])
    det = float(np.linalg.det(jac))
    if det <= 0.0:
        raise QuadratureError("triangle with non-positive orientation", {"det": det})
    return QuadRule(points=v0 + ref_pts @ jac.T, weights=ref_w * det)


def element_quadrature(geometry: ElementGeometry, order: int) -> QuadRule:
    """
    Rule on a polygonal cell, aggregated over its fan triangles

    Exact for polynomials of total degree <= order.
    """
    ref_pts, ref_w = reference_triangle_rule(order)
    tris = geometry.sub_simplices
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0.0):
        raise QuadratureError("degenerate fan triangle", {"min_det": float(det.min())})
    pts = (v0[:, None, :]
           + ref_pts[None, :, 0:1] * e1[:, None, :]
           + ref_pts[None, :, 1:2] * e2[:, None, :])
    weights = det[:, None] * ref_w[None, :]
    return QuadRule(points=pts.reshape(-1, 2), weights=weights.ravel())


def segment_quadrature(a: Sequence[float], b: Sequence[float], order: int) -> QuadRule:
    """Gauss-Legendre rule on the segment a-b exact to degree order"""
    s, w = _gauss_legendre01(_n_points(order))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.hypot(*(b - a)))
    if length <= 0.0:
        raise QuadratureError("zero-length segment")
    return QuadRule(points=a + s[:, None] * (b - a), weights=w * length)


def face_quadrature(face: Face, order: int) -> QuadRule:
    """Gauss-Legendre rule on a mesh face"""
    a, b = face.endpoints
    return segment_quadrature(a, b, order)
