"""
Run Outputs - VTK fields, probe and diagnostics CSVs, config and error files

Everything a command leaves in its output directory is written here:
- fields_<label>_<step>.vtk  VTK unstructured grid through meshio, one block per polygon size
- diagnostics.csv            one row per time step (step_completed events)
- probes.csv                 p and T along the horizontal midline
- config.json                the effective configuration of the run
- error.json                 machine-readable failure report
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import meshio
import numpy as np
import pandas as pd

from .errors import TpeError
from .event_bus import DiagnosticsBus, Event
from .mesh import PolyMesh
from .solver import SolutionState
from .space import DgSpace, FieldId

logger = logging.getLogger(__name__)

POLYGON_TYPES = {3: "triangle", 4: "quad"}
FLOAT_FORMAT = "%.10e"


def cell_means(space: DgSpace, fid: FieldId, vec: np.ndarray) -> np.ndarray:
    """Element averages: (n_cells,) for scalars, (n_cells, 2) for u"""
    out = []
    for c in range(space.mesh.n_cells):
        rule = space.cell_rule(c)
        values, _ = space.evaluate(fid, vec, c, space.cell_basis(c, fid))
        out.append(rule.integrate(values) / rule.measure)
    return np.array(out)


def vertex_values(space: DgSpace, fid: FieldId, vec: np.ndarray) -> np.ndarray:
    """Average over incident cells of each cell's trace at the vertex"""
    mesh = space.mesh
    shape = (mesh.n_vertices, 2) if fid == FieldId.U else (mesh.n_vertices,)
    total = np.zeros(shape)
    count = np.zeros(mesh.n_vertices)
    for c, cell in enumerate(mesh.cells):
        ids = np.asarray(cell)
        values, _ = space.evaluate_at(fid, vec, c, mesh.vertices[ids])
        np.add.at(total, ids, values)
        np.add.at(count, ids, 1.0)
    count = np.maximum(count, 1.0)
    return total / (count[:, None] if fid == FieldId.U else count)


def _polygon_blocks(mesh: PolyMesh) -> List[Tuple[str, np.ndarray, np.ndarray]]:
    """Cells grouped by vertex count: (cell type, connectivity, original cell ids)"""
    groups: Dict[int, List[int]] = {}
    for c, cell in enumerate(mesh.cells):
        groups.setdefault(len(cell), []).append(c)
    blocks = []
    for n_vertices in sorted(groups):
        ids = np.array(groups[n_vertices])
        connectivity = np.array([mesh.cells[c] for c in ids], dtype=int)
        blocks.append((POLYGON_TYPES.get(n_vertices, "polygon"), connectivity, ids))
    return blocks


def _padded(values: np.ndarray) -> np.ndarray:
    """2-vectors to the 3-component layout VTK expects"""
    return np.column_stack([values, np.zeros(len(values))]) if values.ndim == 2 else values


def write_vtk(path: Path, space: DgSpace, state: SolutionState, vertex_resampled: bool = False) -> Path:
    """
    Legacy ASCII VTK file with cell means of (u, p, T, φ)

    Cells are written in blocks of equal vertex count, so the cell order in
    the file follows the blocks, not the mesh numbering.

    Args:
        vertex_resampled: Also write point data averaged from incident cells
    """
    mesh = space.mesh
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blocks = _polygon_blocks(mesh)

    cell_data: Dict[str, List[np.ndarray]] = {}
    point_data: Dict[str, np.ndarray] = {}
    for fid in (FieldId.U, FieldId.P, FieldId.T, FieldId.PHI):
        vec = state.field(fid)
        means = _padded(cell_means(space, fid, vec))
        cell_data[fid.value] = [means[ids] for _, _, ids in blocks]
        if vertex_resampled:
            point_data[fid.value] = _padded(vertex_values(space, fid, vec))

    points = np.column_stack([mesh.vertices, np.zeros(mesh.n_vertices)])
    out = meshio.Mesh(
        points=points,
        cells=[(kind, connectivity) for kind, connectivity, _ in blocks],
        cell_data=cell_data,
        point_data=point_data,
    )
    try:
        meshio.write(path, out, file_format="vtk", binary=False)
    except (OSError, ValueError) as e:
        raise TpeError(f"could not write {path}: {e}") from e
    logger.debug(f"wrote {path} at t={state.time:.6g}")
    return path


def midline_points(mesh: PolyMesh, n_points: int) -> np.ndarray:
    """n_points evenly spaced along y = mid-height, ends included"""
    xmin, xmax, ymin, ymax = mesh.domain.as_tuple()
    xs = np.linspace(xmin, xmax, n_points)
    return np.column_stack([xs, np.full(n_points, 0.5 * (ymin + ymax))])


class ProbeRecorder:
    """Samples p and T at fixed points; located cells are cached"""

    def __init__(self, space: DgSpace, points: np.ndarray):
        self.space = space
        self.points = np.asarray(points, dtype=float)
        self.cells = [space.mesh.locate(p) for p in self.points]
        self.rows: List[Dict[str, float]] = []

    def sample(self, state: SolutionState, step: int = 0) -> List[Dict[str, float]]:
        rows = []
        for (x, y), c in zip(self.points, self.cells):
            pt = np.array([[x, y]])
            p, _ = self.space.evaluate_at(FieldId.P, state.p, c, pt)
            T, _ = self.space.evaluate_at(FieldId.T, state.T, c, pt)
            rows.append({"step": step, "time": state.time, "x": x, "y": y,
                         "p": float(p[0]), "T": float(T[0])})
        self.rows.extend(rows)
        return rows

    def write(self, path: Path) -> Path:
        return write_rows(path, self.rows, ["step", "time", "x", "y", "p", "T"])


class DiagnosticsRecorder:
    """Collects step_completed events from a bus and writes them as CSV"""

    COLUMNS = ["step", "time", "fp_iterations", "energy", "mass_energy", "residual"]

    def __init__(self, bus: DiagnosticsBus, label: str = "run"):
        self.bus = bus
        self.label = label
        self.rows: List[Dict[str, Any]] = []
        self._subscriber_id = f"diagnostics-{label}-{id(self)}"
        bus.subscribe("step_completed", self._on_step, self._subscriber_id)

    def _on_step(self, event: Event) -> None:
        self.rows.append({"label": self.label, **{k: event.data[k] for k in self.COLUMNS}})

    def close(self) -> None:
        self.bus.unsubscribe("step_completed", self._subscriber_id)

    def write(self, path: Path) -> Path:
        return write_rows(path, self.rows, ["label"] + self.COLUMNS)


def write_rows(path: Path, rows: List[Dict[str, Any]], columns: List[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_config(directory: Path, config: Dict[str, Any]) -> Path:
    path = Path(directory) / "config.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
    return path


def write_error(directory: Optional[Path], error: TpeError) -> Optional[Path]:
    """error.json next to the other outputs; returns None when there is no directory"""
    if directory is None:
        return None
    path = Path(directory) / "error.json"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(error.to_dict(), fh, indent=2, default=str)
    except OSError as e:
        logger.error(f"could not write {path}: {e}")
        return None
    return path
