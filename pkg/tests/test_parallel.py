"""Ordered worker pool"""

import numpy as np

from src.assembly import assemble_diffusion, assemble_elasticity
from src.parallel import get_jobs, ordered_map, set_jobs
from src.physics import homogeneous_dirichlet
from src.space import DgSpace, FieldId


def test_results_keep_input_order():
    items = list(range(50))
    assert ordered_map(lambda i: i * i, items, jobs=4) == [i * i for i in items]


def test_set_jobs_floors_at_one():
    set_jobs(0)
    assert get_jobs() == 1
    set_jobs(3)
    assert get_jobs() == 3


def test_matrices_independent_of_worker_count(voronoi12, coeffs, penalties):
    bcs = homogeneous_dirichlet()
    set_jobs(1)
    space = DgSpace(voronoi12, 2)
    serial = (assemble_diffusion(FieldId.T, space, coeffs, penalties, bcs),
              assemble_elasticity(space, coeffs, penalties, bcs))
    set_jobs(3)
    space = DgSpace(voronoi12, 2)
    threaded = (assemble_diffusion(FieldId.T, space, coeffs, penalties, bcs),
                assemble_elasticity(space, coeffs, penalties, bcs))
    for a, b in zip(serial, threaded):
        assert np.array_equal(a.toarray(), b.toarray())
