"""Orthonormal bases, DOF layout and projections"""

import numpy as np
import pytest

from src.errors import SpaceError
from src.space import FIELD_ORDER, DgSpace, FieldId, local_dim, monomial_exponents


def test_local_dim():
    assert [local_dim(k) for k in range(4)] == [1, 3, 6, 10]
    with pytest.raises(SpaceError):
        local_dim(-1)


def test_graded_exponents():
    assert monomial_exponents(2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


def test_dof_layout(space_l1):
    # u: 2 × 3, p, T, φ: 3 each, on 4 cells
    assert space_l1.n_dofs == 4 * (6 + 3 + 3 + 3)
    starts = [space_l1.field_slice(fid).start for fid in FIELD_ORDER]
    assert starts == [0, 24, 36, 48]
    assert space_l1.cell_dofs(FieldId.P, 2).tolist() == [6, 7, 8]


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_bases_orthonormal(voronoi12, degree):
    space = DgSpace(voronoi12, degree)
    n = space.n_basis(FieldId.T)
    for c in range(voronoi12.n_cells):
        rule = space.cell_rule(c)
        values = space.cell_basis(c, FieldId.T).values
        gram = values.T @ (rule.weights[:, None] * values)
        assert gram == pytest.approx(np.eye(n), abs=1e-10)


def test_projection_reproduces_polynomials(voronoi12):
    space = DgSpace(voronoi12, 2)
    vec = space.project(FieldId.P, lambda x, y: 1.0 + x - 2.0 * x * y + y ** 2)
    for c in (0, 5, 11):
        centroid = np.asarray(voronoi12.geometry[c].centroid)[None, :]
        values, grads = space.evaluate_at(FieldId.P, vec, c, centroid)
        x, y = centroid[0]
        assert values[0] == pytest.approx(1.0 + x - 2.0 * x * y + y ** 2)
        assert grads[0] == pytest.approx([1.0 - 2.0 * y, -2.0 * x + 2.0 * y])


def test_displacement_projection_components(space_l1):
    vec = space_l1.project(FieldId.U, lambda x, y: np.stack([-y, x], axis=-1))
    values, grads = space_l1.evaluate_at(FieldId.U, vec, 3, np.array([[0.6, 0.7]]))
    assert values[0] == pytest.approx([-0.7, 0.6])
    assert grads[0] == pytest.approx([[0.0, -1.0], [1.0, 0.0]])


def test_phi_degree_bounds(grid2):
    DgSpace(grid2, 1, phi_degree=2)
    DgSpace(grid2, 2, phi_degree=0)
    with pytest.raises(SpaceError):
        DgSpace(grid2, 1, phi_degree=3)
    with pytest.raises(SpaceError):
        DgSpace(grid2, 0)


def test_enriched_displacement_degree(grid2):
    space = DgSpace(grid2, 1, phi_degree=3, degree_u=2)
    assert space.n_field_dofs(FieldId.U) == 4 * 2 * 6
    assert space.n_field_dofs(FieldId.P) == 4 * 3
    assert space.n_field_dofs(FieldId.PHI) == 4 * 10
    vec = space.project(FieldId.U, lambda x, y: np.stack([x * x, x * y], axis=-1))
    values, _ = space.evaluate_at(FieldId.U, vec, 0, np.array([[0.25, 0.1]]))
    np.testing.assert_allclose(values, [[0.0625, 0.025]], atol=1e-12)


def test_lower_degree_fields_share_prefix(grid2):
    space = DgSpace(grid2, 2, phi_degree=1)
    full = space.cell_basis(0, FieldId.T).values
    phi = space.cell_basis(0, FieldId.PHI).values
    assert phi.shape[1] == 3
    assert np.array_equal(phi, full[:, :3])


def test_split_join(space_l1):
    x = np.arange(space_l1.n_dofs, dtype=float)
    parts = space_l1.split(x)
    assert parts[FieldId.PHI][0] == 48.0
    assert np.array_equal(space_l1.join(parts), x)
