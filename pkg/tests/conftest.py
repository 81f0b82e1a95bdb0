"""Shared fixtures: small meshes, spaces and coefficient sets"""

import pytest

from src.event_bus import reset_event_bus
from src.mesh import Rectangle, generate_cartesian, generate_voronoi
from src.parallel import set_jobs
from src.physics import PenaltyParams, baseline_coefficients
from src.space import DgSpace


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def fresh_process_state():
    set_jobs(1)
    yield reset_event_bus()
    set_jobs(1)


@pytest.fixture
def unit_square():
    return Rectangle(0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def grid2(unit_square):
    """2 × 2 Cartesian mesh of the unit square"""
    return generate_cartesian(unit_square, 2, 2)


@pytest.fixture
def voronoi12():
    return generate_voronoi(Rectangle(0.0, 2.0, 0.0, 2.0), 12, 5, 7)


@pytest.fixture
def space_l1(grid2):
    return DgSpace(grid2, 1)


@pytest.fixture
def coeffs():
    return baseline_coefficients()


@pytest.fixture
def penalties():
    return PenaltyParams()
