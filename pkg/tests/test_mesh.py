"""Mesh generation, topology, tagging and file I/O"""

import numpy as np
import pytest

from src.errors import MeshError
from src.mesh import (
    Rectangle,
    generate_voronoi,
    load_mesh,
    make_mesh,
    meshes_from_spec,
    regularity_report,
    save_mesh,
)


def test_cartesian_counts(grid2):
    assert grid2.n_cells == 4
    assert grid2.n_vertices == 9
    assert grid2.n_faces == 12
    assert len(grid2.interior_faces) == 4
    assert grid2.n_vertices - grid2.n_faces + grid2.n_cells == 1


def test_cartesian_boundary_tags(grid2):
    for tag in (1, 2, 3, 4):
        assert len(grid2.faces_with_tag(tag)) == 2
    for f in grid2.faces_with_tag(1):
        assert grid2.faces[f].normal == pytest.approx((0.0, -1.0))
    for f in grid2.faces_with_tag(2):
        assert grid2.faces[f].normal == pytest.approx((1.0, 0.0))


def test_normals_point_out_of_cell_plus(voronoi12):
    for face in voronoi12.faces:
        centroid = np.asarray(voronoi12.geometry[face.cell_plus].centroid)
        assert np.dot(face.normal, np.asarray(face.midpoint) - centroid) > 0.0


def test_mesh_size_and_regularity(grid2):
    assert grid2.h == pytest.approx(np.sqrt(0.5))
    reg = regularity_report(grid2)
    assert reg == pytest.approx(np.full(4, 1.0 / (2.0 * np.sqrt(2.0))))


def test_voronoi_covers_domain(voronoi12):
    assert voronoi12.n_cells == 12
    assert voronoi12.total_area == pytest.approx(4.0, rel=1e-10)
    assert np.all(regularity_report(voronoi12) > 0.0)
    assert set(voronoi12.boundary_tags.values()) == {1, 2, 3, 4}


def test_voronoi_reproducible():
    rect = Rectangle(0.0, 2.0, 0.0, 2.0)
    a = generate_voronoi(rect, 30, 3, 11)
    b = generate_voronoi(rect, 30, 3, 11)
    assert np.array_equal(a.vertices, b.vertices)
    assert a.cells == b.cells


def test_locate(grid2):
    assert grid2.locate((0.25, 0.25)) == 0
    assert grid2.locate((0.75, 0.75)) == 3
    with pytest.raises(MeshError):
        grid2.locate((1.5, 0.5))


def test_clockwise_cell_rejected(unit_square):
    corners = unit_square.corners()
    with pytest.raises(MeshError):
        make_mesh(corners, [[0, 3, 2, 1]], unit_square)


def test_boundary_edge_off_domain_rejected(unit_square):
    corners = unit_square.corners()
    with pytest.raises(MeshError):
        make_mesh(corners, [[0, 1, 2]], unit_square)


def test_degenerate_rectangle():
    with pytest.raises(MeshError):
        Rectangle(1.0, 1.0, 0.0, 1.0)


def test_save_and_load(tmp_path, voronoi12):
    path = tmp_path / "mesh.json"
    save_mesh(voronoi12, path)
    loaded = load_mesh(path)
    assert loaded.n_cells == voronoi12.n_cells
    assert loaded.n_faces == voronoi12.n_faces
    assert loaded.boundary_tags == voronoi12.boundary_tags
    assert np.array_equal(loaded.vertices, voronoi12.vertices)


def test_load_missing_file(tmp_path):
    with pytest.raises(MeshError):
        load_mesh(tmp_path / "nope.json")


def test_cartesian_spec_follows_aspect_ratio():
    meshes = meshes_from_spec("cartesian", (0.0, 4.0, 0.0, 1.0), [1, 2])
    assert [m.n_cells for m in meshes] == [4, 16]
    assert meshes[0].h > meshes[1].h


def test_unknown_mesh_kind():
    with pytest.raises(MeshError):
        meshes_from_spec("hexagonal", (0.0, 1.0, 0.0, 1.0), [2])
