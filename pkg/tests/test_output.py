"""VTK, probe and diagnostics writers"""

import json

import meshio
import numpy as np
import pandas as pd
import pytest

from src.errors import ConfigError
from src.event_bus import DiagnosticsBus
from src.output import (
    DiagnosticsRecorder,
    ProbeRecorder,
    cell_means,
    midline_points,
    vertex_values,
    write_config,
    write_error,
    write_vtk,
)
from src.solver import SolutionState
from src.space import DgSpace, FieldId


def _state(space, p=lambda x, y: 2.0 * x + y):
    n = space.n_field_dofs
    return SolutionState(
        time=0.25,
        u=space.project(FieldId.U, lambda x, y: np.stack([x, -y], axis=-1)),
        p=space.project(FieldId.P, p),
        T=space.project(FieldId.T, lambda x, y: np.full_like(x, 3.0)),
        phi=np.zeros(n(FieldId.PHI)),
    )


def test_cell_means(space_l1):
    state = _state(space_l1)
    assert cell_means(space_l1, FieldId.T, state.T) == pytest.approx(np.full(4, 3.0))
    # mean of 2x + y on the bottom-left quarter
    assert cell_means(space_l1, FieldId.P, state.p)[0] == pytest.approx(0.75)
    assert cell_means(space_l1, FieldId.U, state.u).shape == (4, 2)


def test_vertex_values_of_continuous_field(space_l1):
    state = _state(space_l1)
    values = vertex_values(space_l1, FieldId.P, state.p)
    expected = 2.0 * space_l1.mesh.vertices[:, 0] + space_l1.mesh.vertices[:, 1]
    assert values == pytest.approx(expected)


def _read_cell_field(path, mesh, name):
    """Cell data read back from a VTK file, in mesh cell order"""
    written = meshio.read(path)
    lookup = {tuple(cell): c for c, cell in enumerate(mesh.cells)}
    values = {}
    for block, data in zip(written.cells, written.cell_data[name]):
        for conn, value in zip(block.data, data):
            values[lookup[tuple(int(v) for v in conn)]] = value
    return written, np.array([values[c] for c in range(mesh.n_cells)])


def test_vtk_fields_read_back(tmp_path, space_l1):
    state = _state(space_l1)
    path = write_vtk(tmp_path / "fields.vtk", space_l1, state, vertex_resampled=True)
    assert path.read_text().startswith("# vtk DataFile Version")
    written, p = _read_cell_field(path, space_l1.mesh, "p")
    assert written.points.shape == (9, 3)
    assert sum(len(block.data) for block in written.cells) == 4
    assert p == pytest.approx(cell_means(space_l1, FieldId.P, state.p), rel=1e-10)
    for name in ("u", "T", "phi"):
        assert name in written.cell_data
    assert written.point_data["p"] == pytest.approx(vertex_values(space_l1, FieldId.P, state.p), rel=1e-10)
    assert written.point_data["u"].shape == (9, 3)


def test_vtk_mixed_polygons_keep_cell_data_aligned(tmp_path, voronoi12):
    space = DgSpace(voronoi12, 1)
    state = _state(space)
    path = write_vtk(tmp_path / "voronoi.vtk", space, state)
    written, p = _read_cell_field(path, voronoi12, "p")
    assert sum(len(block.data) for block in written.cells) == voronoi12.n_cells
    assert p == pytest.approx(cell_means(space, FieldId.P, state.p), rel=1e-10)
    assert not written.point_data


def test_midline_points(grid2):
    pts = midline_points(grid2, 5)
    assert pts[:, 0] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert np.all(pts[:, 1] == 0.5)


def test_probe_recorder(tmp_path, space_l1):
    probes = ProbeRecorder(space_l1, midline_points(space_l1.mesh, 3))
    rows = probes.sample(_state(space_l1), step=7)
    assert [r["p"] for r in rows] == pytest.approx([0.5, 1.5, 2.5])
    assert all(r["T"] == pytest.approx(3.0) for r in rows)
    frame = pd.read_csv(probes.write(tmp_path / "probes.csv"))
    assert list(frame.columns) == ["step", "time", "x", "y", "p", "T"]
    assert frame["step"].tolist() == [7, 7, 7]


def test_diagnostics_recorder(tmp_path):
    bus = DiagnosticsBus()
    recorder = DiagnosticsRecorder(bus, "demo")
    row = {"step": 1, "time": 0.1, "fp_iterations": 2, "energy": 1.5, "mass_energy": 1.0, "residual": 1e-12}
    bus.publish("step_completed", "test", row)
    recorder.close()
    bus.publish("step_completed", "test", dict(row, step=2))
    assert len(recorder.rows) == 1
    frame = pd.read_csv(recorder.write(tmp_path / "diag.csv"))
    assert frame["label"].tolist() == ["demo"]
    assert frame["fp_iterations"].tolist() == [2]


def test_config_and_error_files(tmp_path):
    path = write_config(tmp_path, {"b": 1, "a": {"z": 0, "y": 2}})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    error_path = write_error(tmp_path, ConfigError("bad theta", {"theta": 0.2}))
    payload = json.loads(error_path.read_text())
    assert payload == {"error": "ConfigError", "message": "bad theta", "details": {"theta": 0.2}}
    assert write_error(None, ConfigError("no directory")) is None
