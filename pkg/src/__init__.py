"""
TPE - polytopal discontinuous Galerkin solver for thermo-poroelasticity
Displacement, pressure, temperature and total pressure on polygonal meshes
"""

__version__ = "0.1.0"
__author__ = "TPE Project"
