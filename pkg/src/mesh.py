"""
Polygonal Meshes - rectangular 2D domains cut into convex polygons

Builds, imports and interrogates the meshes every discrete form is assembled on.

Why polygons?
- Voronoi cells give the "uniform" unstructured meshes used in the
  convergence and robustness studies
- Cartesian grids are the same data structure with four-vertex cells, handy
  for hand-checkable tests
- The DG method needs nothing from a cell beyond its boundary polyline and a
  fan of sub-triangles for quadrature

Conventions:
- Cells are counter-clockwise vertex index lists
- Faces are numbered in order of first appearance while walking cells in
  index order and each cell's edges counter-clockwise; the first cell to walk
  an edge is its cell_plus and the face normal points out of cell_plus
- Boundary faces carry a side tag: 1 bottom, 2 right, 3 top, 4 left

Mesh files are ASCII JSON:
    {"vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...],
     "boundary_tags": {"face_index": tag}, "domain": [xmin, xmax, ymin, ymax]}
Faces are recomputed on load.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import MeshError

logger = logging.getLogger(__name__)

AREA_RTOL = 1e-10
MAX_SEED_RETRIES = 10


class Point2(NamedTuple):
    """Point of the plane"""
    x: float
    y: float


class BoundarySide(Enum):
    """Rectangle sides and their boundary tags"""
    BOTTOM = 1
    RIGHT = 2
    TOP = 3
    LEFT = 4


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle (xmin, xmax) × (ymin, ymax)"""
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (np.isfinite([self.xmin, self.xmax, self.ymin, self.ymax]).all()
                and self.xmax > self.xmin and self.ymax > self.ymin):
            raise MeshError("degenerate rectangle", {"rect": self.as_tuple()})

    @classmethod
    def from_tuple(cls, bounds: Sequence[float]) -> "Rectangle":
        xmin, xmax, ymin, ymax = (float(b) for b in bounds)
        return cls(xmin, xmax, ymin, ymax)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.xmax - self.xmin, self.ymax - self.ymin))

    def corners(self) -> np.ndarray:
        """Corners in counter-clockwise order starting bottom-left"""
        return np.array([
            [self.xmin, self.ymin],
            [self.xmax, self.ymin],
            [self.xmax, self.ymax],
            [self.xmin, self.ymax],
        ])

    def side_of(self, a: np.ndarray, b: np.ndarray, tol: float) -> int:
        """Tag of the side the segment a-b lies on (0 if none)"""
        if abs(a[1] - self.ymin) <= tol and abs(b[1] - self.ymin) <= tol:
            return BoundarySide.BOTTOM.value
        if abs(a[0] - self.xmax) <= tol and abs(b[0] - self.xmax) <= tol:
            return BoundarySide.RIGHT.value
        if abs(a[1] - self.ymax) <= tol and abs(b[1] - self.ymax) <= tol:
            return BoundarySide.TOP.value
        if abs(a[0] - self.xmin) <= tol and abs(b[0] - self.xmin) <= tol:
            return BoundarySide.LEFT.value
        return 0


class FaceKind(Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class Face:
    """
    Mesh edge with its incident cells

    Attributes:
        vertices: Vertex indices in cell_plus orientation
        endpoints: Coordinates of those vertices
        kind: Interior or boundary
        cell_plus: Cell that first walks this edge
        cell_minus: Other cell (None on the boundary)
        normal: Unit normal pointing out of cell_plus
        length: Edge length
        tag: Boundary side tag (0 for interior faces)
    """
    vertices: Tuple[int, int]
    endpoints: Tuple[Point2, Point2]
    kind: FaceKind
    cell_plus: int
    cell_minus: Optional[int]
    normal: Tuple[float, float]
    length: float
    tag: int = 0

    @property
    def is_interior(self) -> bool:
        return self.kind == FaceKind.INTERIOR

    @property
    def midpoint(self) -> Point2:
        a, b = self.endpoints
        return Point2(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))


@dataclass
class ElementGeometry:
    """
    Per-cell geometric quantities

    Attributes:
        diameter: Max pairwise vertex distance h
        area: Polygon area
        centroid: Area centroid
        bounding_box: (lower-left, upper-right)
        sub_simplices: Fan triangles (centroid, v_i, v_i+1), shape (n_edges, 3, 2)
    """
    diameter: float
    area: float
    centroid: Point2
    bounding_box: Tuple[Point2, Point2]
    sub_simplices: np.ndarray


@dataclass
class PolyMesh:
    """Polygonal mesh of a rectangle with face topology and cell geometry"""
    vertices: np.ndarray
    cells: List[List[int]]
    faces: List[Face]
    boundary_tags: Dict[int, int]
    domain: Rectangle
    geometry: List[ElementGeometry]
    cell_faces: List[List[int]]
    _locator: Optional[cKDTree] = field(default=None, repr=False, compare=False)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def interior_faces(self) -> List[int]:
        return [i for i, f in enumerate(self.faces) if f.is_interior]

    @property
    def boundary_faces(self) -> List[int]:
        return [i for i, f in enumerate(self.faces) if not f.is_interior]

    @property
    def h(self) -> float:
        """Mesh size: largest cell diameter"""
        return max(g.diameter for g in self.geometry)

    @property
    def total_area(self) -> float:
        return float(sum(g.area for g in self.geometry))

    def cell_polygon(self, cell: int) -> np.ndarray:
        return self.vertices[self.cells[cell]]

    def faces_with_tag(self, tag: int) -> List[int]:
        return [i for i, t in self.boundary_tags.items() if t == tag]

    def locate(self, point: Sequence[float]) -> int:
        """Index of a cell containing the point (MeshError if outside the domain)"""
        if self._locator is None:
            centroids = np.array([g.centroid for g in self.geometry])
            self._locator = cKDTree(centroids)
        p = np.asarray(point, dtype=float)
        k = min(self.n_cells, 8)
        _, candidates = self._locator.query(p, k=k)
        ordered = list(np.atleast_1d(candidates)) + list(range(self.n_cells))
        tol = 1e-12 * self.domain.diameter
        for c in ordered:
            if _contains(self.cell_polygon(int(c)), p, tol):
                return int(c)
        raise MeshError("point outside the mesh", {"point": p.tolist()})


def _contains(polygon: np.ndarray, p: np.ndarray, tol: float) -> bool:
    """Point-in-convex-polygon test for counter-clockwise polygons"""
    edges = np.roll(polygon, -1, axis=0) - polygon
    rel = p - polygon
    cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    return bool(np.all(cross >= -tol * np.linalg.norm(edges, axis=1)))


def signed_area(polygon: np.ndarray) -> float:
    """Shoelace area (positive for counter-clockwise polygons)"""
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(polygon: np.ndarray) -> np.ndarray:
    """Area centroid of a simple polygon"""
    x, y = polygon[:, 0], polygon[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        return polygon.mean(axis=0)
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * area)


def sub_triangulate(polygon: np.ndarray, center: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Fan triangulation of a star-shaped cell about its centroid

    Args:
        polygon: Counter-clockwise vertices, shape (n, 2)
        center: Fan apex (defaults to the area centroid)

    Returns:
        Triangles (apex, v_i, v_i+1), shape (n, 3, 2)

    Raises:
        MeshError: A fan triangle is inverted or flat (cell not star-shaped)
    """
    apex = polygon_centroid(polygon) if center is None else np.asarray(center, dtype=float)
    nxt = np.roll(polygon, -1, axis=0)
    tris = np.empty((len(polygon), 3, 2))
    tris[:, 0] = apex
    tris[:, 1] = polygon
    tris[:, 2] = nxt
    areas = _triangle_areas(tris)
    if np.any(areas <= 0.0):
        raise MeshError(
            "cell is not star-shaped with respect to its centroid",
            {"min_triangle_area": float(areas.min())},
        )
    return tris


def _triangle_areas(tris: np.ndarray) -> np.ndarray:
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _element_geometry(polygon: np.ndarray) -> ElementGeometry:
    area = signed_area(polygon)
    centroid = polygon_centroid(polygon)
    lo, hi = polygon.min(axis=0), polygon.max(axis=0)
    return ElementGeometry(
        diameter=float(pdist(polygon).max()),
        area=area,
        centroid=Point2(float(centroid[0]), float(centroid[1])),
        bounding_box=(Point2(float(lo[0]), float(lo[1])), Point2(float(hi[0]), float(hi[1]))),
        sub_simplices=sub_triangulate(polygon, centroid),
    )


def build_topology(
    cells: Sequence[Sequence[int]],
    vertices: np.ndarray,
    domain: Rectangle,
) -> Tuple[List[Face], Dict[int, int]]:
    """
    Pair cell edges into faces and tag the boundary

    Args:
        cells: Counter-clockwise vertex index lists
        vertices: Vertex coordinates, shape (n, 2)
        domain: Rectangle the boundary faces must lie on

    Returns:
        (faces, boundary_tags) with boundary_tags mapping face id to side tag

    Raises:
        MeshError: Edge shared by more than two cells, inconsistent orientation,
            zero-length edge, or a boundary edge off the rectangle
    """
    edge_to_face: Dict[Tuple[int, int], int] = {}
    records: List[List] = []  # [a, b, plus, minus]

    for c, cell in enumerate(cells):
        n = len(cell)
        for k in range(n):
            a, b = int(cell[k]), int(cell[(k + 1) % n])
            if a == b:
                raise MeshError("repeated vertex in cell", {"cell": c, "vertex": a})
            key = (a, b) if a < b else (b, a)
            f = edge_to_face.get(key)
            if f is None:
                edge_to_face[key] = len(records)
                records.append([a, b, c, None])
                continue
            rec = records[f]
            if rec[3] is not None or rec[2] == c:
                raise MeshError("edge shared by more than two cells", {"edge": list(key), "cell": c})
            if rec[0] == a:
                raise MeshError("neighbouring cells walk a shared edge in the same direction",
                                {"edge": list(key), "cells": [rec[2], c]})
            rec[3] = c

    tol = 1e-10 * domain.diameter
    faces: List[Face] = []
    boundary_tags: Dict[int, int] = {}
    for f, (a, b, plus, minus) in enumerate(records):
        pa, pb = vertices[a], vertices[b]
        d = pb - pa
        length = float(np.hypot(d[0], d[1]))
        if length <= tol:
            raise MeshError("zero-length edge", {"face": f, "vertices": [a, b]})
        normal = (float(d[1] / length), float(-d[0] / length))
        tag = 0
        if minus is None:
            tag = domain.side_of(pa, pb, tol)
            if tag == 0:
                raise MeshError("boundary edge is not on the domain boundary",
                                {"face": f, "endpoints": [pa.tolist(), pb.tolist()]})
            boundary_tags[f] = tag
        faces.append(Face(
            vertices=(a, b),
            endpoints=(Point2(float(pa[0]), float(pa[1])), Point2(float(pb[0]), float(pb[1]))),
            kind=FaceKind.INTERIOR if minus is not None else FaceKind.BOUNDARY,
            cell_plus=plus,
            cell_minus=minus,
            normal=normal,
            length=length,
            tag=tag,
        ))
    return faces, boundary_tags


def make_mesh(vertices: np.ndarray, cells: Sequence[Sequence[int]], domain: Rectangle) -> PolyMesh:
    """Validate cells, build topology and geometry"""
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2 or not np.isfinite(vertices).all():
        raise MeshError("vertices must be a finite (n, 2) array")
    cell_lists = [[int(i) for i in cell] for cell in cells]
    for c, cell in enumerate(cell_lists):
        if len(cell) < 3:
            raise MeshError("cell with fewer than 3 vertices", {"cell": c})
        if min(cell) < 0 or max(cell) >= len(vertices):
            raise MeshError("cell references a missing vertex", {"cell": c})
        if signed_area(vertices[cell]) <= 0.0:
            raise MeshError("cell is not counter-clockwise with positive area", {"cell": c})

    faces, boundary_tags = build_topology(cell_lists, vertices, domain)
    geometry = [_element_geometry(vertices[cell]) for cell in cell_lists]

    cell_faces: List[List[int]] = [[] for _ in cell_lists]
    edge_to_face = {}
    for f, face in enumerate(faces):
        edge_to_face[tuple(sorted(face.vertices))] = f
    for c, cell in enumerate(cell_lists):
        n = len(cell)
        cell_faces[c] = [edge_to_face[tuple(sorted((cell[k], cell[(k + 1) % n])))] for k in range(n)]

    mesh = PolyMesh(
        vertices=vertices,
        cells=cell_lists,
        faces=faces,
        boundary_tags=boundary_tags,
        domain=domain,
        geometry=geometry,
        cell_faces=cell_faces,
    )
    total = mesh.total_area
    if abs(total - domain.area) > AREA_RTOL * domain.area:
        raise MeshError("cells do not cover the domain",
                        {"cell_area": total, "domain_area": domain.area})
    return mesh


def generate_cartesian(rect: Rectangle, nx: int, ny: int) -> PolyMesh:
    """
    Structured grid of nx × ny rectangles

    Vertices are numbered row by row from the bottom-left corner, cells
    likewise.
    """
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be >= 1", {"nx": nx, "ny": ny})
    xs = np.linspace(rect.xmin, rect.xmax, nx + 1)
    ys = np.linspace(rect.ymin, rect.ymax, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i: int, j: int) -> int:
        return j * (nx + 1) + i

    cells = [
        [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
        for j in range(ny) for i in range(nx)
    ]
    mesh = make_mesh(vertices, cells, rect)
    logger.debug(f"cartesian mesh {nx}x{ny}: {mesh.n_cells} cells, {mesh.n_faces} faces")
    return mesh


def _clip_half_plane(polygon: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon to {x : normal·x <= offset}"""
    values = polygon @ normal - offset
    out = []
    n = len(polygon)
    for k in range(n):
        p, q = polygon[k], polygon[(k + 1) % n]
        fp, fq = values[k], values[(k + 1) % n]
        if fp <= 0.0:
            out.append(p)
        if (fp < 0.0 < fq) or (fq < 0.0 < fp):
            out.append(p + (fp / (fp - fq)) * (q - p))
    return np.array(out) if out else np.empty((0, 2))


def _voronoi_regions(seeds: np.ndarray, rect: Rectangle) -> List[np.ndarray]:
    """Voronoi cells of the seeds clipped to the rectangle"""
    n = len(seeds)
    box = rect.corners()
    if n == 1:
        return [box]
    tree = cKDTree(seeds)
    regions = []
    for i, s in enumerate(seeds):
        poly = box
        k = min(n, 16)
        used = 1
        while True:
            dists, idx = tree.query(s, k=k)
            for d, j in zip(dists[used:], idx[used:]):
                radius = np.sqrt(((poly - s) ** 2).sum(axis=1).max())
                if d > 2.0 * radius:
                    break
                direction = seeds[j] - s
                poly = _clip_half_plane(poly, direction, float(direction @ (0.5 * (s + seeds[j]))))
                if len(poly) < 3:
                    break
            else:
                used = k
                if k < n:
                    k = min(n, 2 * k)
                    continue
            break
        regions.append(poly)
    return regions


def _weld(regions: List[np.ndarray], rect: Rectangle) -> Tuple[np.ndarray, List[List[int]]]:
    """Merge coincident polygon vertices into one vertex array"""
    tol = 1e-8 * rect.diameter
    points = np.vstack(regions)
    # snap onto the rectangle sides so boundary edges are tagged exactly
    for col, lo, hi in ((0, rect.xmin, rect.xmax), (1, rect.ymin, rect.ymax)):
        points[np.abs(points[:, col] - lo) <= tol, col] = lo
        points[np.abs(points[:, col] - hi) <= tol, col] = hi

    neighbours = cKDTree(points).query_ball_point(points, r=tol)
    representative = -np.ones(len(points), dtype=int)
    kept: List[int] = []
    for i in range(len(points)):
        if representative[i] >= 0:
            continue
        representative[i] = len(kept)
        for j in neighbours[i]:
            if representative[j] < 0:
                representative[j] = len(kept)
        kept.append(i)

    cells = []
    start = 0
    for region in regions:
        ids = representative[start:start + len(region)].tolist()
        start += len(region)
        cell = [v for k, v in enumerate(ids) if v != ids[k - 1]]
        cells.append(cell)
    return points[kept], cells


def _duplicate_seeds(seeds: np.ndarray, tol: float) -> List[int]:
    pairs = cKDTree(seeds).query_pairs(r=tol)
    return sorted({j for _, j in pairs})


def generate_voronoi(rect: Rectangle, n_seeds: int, lloyd_iterations: int = 20,
                     rng_seed: int = 42) -> PolyMesh:
    """
    Centroidal-ish Voronoi mesh of a rectangle

    Seeds are drawn uniformly from numpy's default generator, then moved to
    the centroids of their clipped cells for lloyd_iterations sweeps.

    Args:
        rect: Domain
        n_seeds: Number of cells
        lloyd_iterations: Lloyd smoothing sweeps
        rng_seed: Generator seed (bit-reproducible meshes)

    Raises:
        MeshError: Degenerate cells persist after MAX_SEED_RETRIES perturbations
    """
    if n_seeds < 1:
        raise MeshError("n_seeds must be >= 1", {"n_seeds": n_seeds})
    if lloyd_iterations < 0:
        raise MeshError("lloyd_iterations must be >= 0")
    rng = np.random.default_rng(rng_seed)
    lo = np.array([rect.xmin, rect.ymin])
    span = np.array([rect.xmax - rect.xmin, rect.ymax - rect.ymin])
    seeds = lo + rng.random((n_seeds, 2)) * span
    tol = 1e-8 * rect.diameter
    min_area = 1e-14 * rect.area

    for sweep in range(lloyd_iterations + 1):
        for attempt in range(MAX_SEED_RETRIES + 1):
            dup = _duplicate_seeds(seeds, tol)
            regions = _voronoi_regions(seeds, rect) if not dup else []
            bad = dup or [i for i, r in enumerate(regions)
                          if len(r) < 3 or signed_area(r) <= min_area]
            if not bad:
                break
            if attempt == MAX_SEED_RETRIES:
                raise MeshError("degenerate Voronoi cells after seed perturbation",
                                {"cells": bad[:10], "retries": MAX_SEED_RETRIES})
            logger.warning(f"perturbing {len(bad)} degenerate seeds (attempt {attempt + 1})")
            seeds[bad] += (rng.random((len(bad), 2)) - 0.5) * 1e-3 * span
            seeds = np.clip(seeds, lo, lo + span)
        if sweep < lloyd_iterations:
            seeds = np.array([polygon_centroid(r) for r in regions])

    vertices, cells = _weld(regions, rect)
    mesh = make_mesh(vertices, cells, rect)
    logger.debug(f"voronoi mesh: {mesh.n_cells} cells, {mesh.n_faces} faces, h={mesh.h:.4g}")
    return mesh


def regularity_report(mesh: PolyMesh) -> np.ndarray:
    """
    Polytopic regularity constant per cell

    For each cell, the minimum over its faces F of 2|S_F| / (h |F|) where
    S_F is the fan triangle standing on F. Positive values certify the cell
    as regular with that constant; degenerate cells report 0.
    """
    values = np.zeros(mesh.n_cells)
    for c, geo in enumerate(mesh.geometry):
        areas = _triangle_areas(geo.sub_simplices)
        lengths = np.linalg.norm(geo.sub_simplices[:, 2] - geo.sub_simplices[:, 1], axis=1)
        if geo.diameter <= 0.0 or np.any(lengths <= 0.0):
            continue
        values[c] = max(0.0, float(np.min(2.0 * areas / (geo.diameter * lengths))))
    return values


class MeshDocument(BaseModel):
    """JSON mesh file schema"""
    vertices: List[Tuple[float, float]]
    cells: List[List[int]]
    boundary_tags: Dict[str, int] = Field(default_factory=dict)
    domain: Optional[Tuple[float, float, float, float]] = None


def save_mesh(mesh: PolyMesh, path: Path) -> None:
    """Write the mesh as ASCII JSON (floats round-trip exactly)"""
    doc = MeshDocument(
        vertices=[(float(x), float(y)) for x, y in mesh.vertices],
        cells=mesh.cells,
        boundary_tags={str(f): t for f, t in sorted(mesh.boundary_tags.items())},
        domain=mesh.domain.as_tuple(),
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(doc.model_dump_json(indent=1))
    logger.info(f"mesh written to {path}")


def load_mesh(path: Path) -> PolyMesh:
    """
    Read a JSON mesh file and rebuild its faces

    Stored boundary tags override the geometric side detection; every
    boundary face must end up with a tag.
    """
    try:
        with open(path, "r") as fh:
            doc = MeshDocument.model_validate(json.load(fh))
    except FileNotFoundError as e:
        raise MeshError(f"mesh file not found: {path}") from e
    except (json.JSONDecodeError, ValueError) as e:
        raise MeshError(f"invalid mesh file: {path}", {"reason": str(e)}) from e

    vertices = np.array(doc.vertices, dtype=float).reshape(-1, 2)
    if doc.domain is not None:
        domain = Rectangle.from_tuple(doc.domain)
    else:
        lo, hi = vertices.min(axis=0), vertices.max(axis=0)
        domain = Rectangle(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))

    mesh = make_mesh(vertices, doc.cells, domain)
    for key, tag in doc.boundary_tags.items():
        f = int(key)
        if f not in mesh.boundary_tags:
            raise MeshError("boundary tag on a face that is not a boundary face", {"face": f})
        mesh.boundary_tags[f] = int(tag)
        face = mesh.faces[f]
        mesh.faces[f] = Face(face.vertices, face.endpoints, face.kind, face.cell_plus,
                             face.cell_minus, face.normal, face.length, int(tag))
    return mesh


def meshes_from_spec(kind: str, domain: Sequence[float], sizes: Sequence[int],
                     lloyd_iterations: int = 20, rng_seed: int = 42,
                     files: Sequence[str] = ()) -> List[PolyMesh]:
    """
    Mesh sequence described by a run configuration

    Args:
        kind: "voronoi" (sizes = seeds), "cartesian" (sizes = cells along
            the shorter side, scaled with the aspect ratio) or "file"
        domain: (xmin, xmax, ymin, ymax)
        sizes: One entry per level
        lloyd_iterations: Lloyd sweeps for Voronoi meshes
        rng_seed: Seed for Voronoi meshes
        files: Mesh files for kind == "file"
    """
    rect = Rectangle.from_tuple(domain)
    if kind == "file":
        return [load_mesh(Path(f)) for f in files]
    if kind == "cartesian":
        short = min(rect.xmax - rect.xmin, rect.ymax - rect.ymin)
        out = []
        for n in sizes:
            nx = max(1, round(n * (rect.xmax - rect.xmin) / short))
            ny = max(1, round(n * (rect.ymax - rect.ymin) / short))
            out.append(generate_cartesian(rect, nx, ny))
        return out
    if kind == "voronoi":
        return [generate_voronoi(rect, n, lloyd_iterations, rng_seed) for n in sizes]
    raise MeshError(f"unknown mesh kind: {kind}")


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    demo = generate_voronoi(Rectangle(0.0, 2.0, 0.0, 2.0), 100, 20, 42)
    reg = regularity_report(demo)
    print(f"cells={demo.n_cells} faces={demo.n_faces} vertices={demo.n_vertices}")
    print(f"Euler V-E+C = {demo.n_vertices - demo.n_faces + demo.n_cells}")
    print(f"h={demo.h:.4f} regularity min={reg.min():.4f} mean={reg.mean():.4f}")
