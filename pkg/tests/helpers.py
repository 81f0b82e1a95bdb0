"""Problem builders shared by the test modules"""

import numpy as np

from src.physics import (
    BoundaryConditions,
    Dirichlet,
    Neumann,
    Problem,
    constant_scalar,
    constant_vector,
)


def zero_data_problem(coefficients, bcs, T0=0.0, name="zero-data"):
    """Problem without sources; only the initial temperature can be nonzero"""
    zero_s = constant_scalar(0.0)
    zero_v = constant_vector(0.0, 0.0)
    return Problem(name=name, coefficients=coefficients, bcs=bcs, f=zero_v, g=zero_s, H=zero_s,
                   u0=zero_v, p0=zero_s, T0=constant_scalar(T0), domain=(0.0, 1.0, 0.0, 1.0))


def all_faces(condition):
    return {tag: condition for tag in (1, 2, 3, 4)}


def traction_free_neumann_flow():
    """Traction-free displacement, insulated and impermeable boundary"""
    zero_s = constant_scalar(0.0)
    return BoundaryConditions(
        displacement=all_faces(Neumann(constant_vector(0.0, 0.0))),
        pressure=all_faces(Neumann(zero_s)),
        temperature=all_faces(Neumann(zero_s)),
    )


def linear_pressure_bcs():
    """p = x + y on every side, homogeneous u and T"""
    return BoundaryConditions(
        displacement=all_faces(Dirichlet(constant_vector(0.0, 0.0))),
        pressure=all_faces(Dirichlet(lambda x, y, t: np.asarray(x) + np.asarray(y))),
        temperature=all_faces(Dirichlet(constant_scalar(0.0))),
    )
