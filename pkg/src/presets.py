"""
Named experiment presets

Each preset is a partial run configuration; a user config file and command
line flags are layered on top of it before validation.
"""

import copy
from typing import Any, Dict, List

from .errors import ConfigError

SQUARE = [0.0, 2.0, 0.0, 2.0]
SLAB = [0.0, 4.0, 0.0, 1.0]

_STEADY = {"theta": 1.0, "dt": 1.0, "t_final": 1.0, "steady": True}
_UNSTEADY_SHORT = {"theta": 0.5, "dt": 1e-4, "t_final": 0.01, "steady": False}

_LINEAR_L1 = {"kind": "voronoi", "domain": SQUARE, "sizes": [100, 310, 1000, 3100]}
_LINEAR_L3 = {"kind": "voronoi", "domain": SQUARE, "sizes": [100, 310, 1000]}
_NONLINEAR = {"kind": "voronoi", "domain": SQUARE, "sizes": [20, 80, 320, 1280]}


def _convergence(degree: int, mesh: Dict[str, Any], nonlinear: bool) -> Dict[str, Any]:
    return {
        "experiment": "convergence",
        "degree": degree,
        "nonlinear": nonlinear,
        "mesh": mesh,
        "time": _UNSTEADY_SHORT if nonlinear else _STEADY,
    }


def _robustness(test: str, degree: int, mesh: Dict[str, Any], nonlinear: bool) -> Dict[str, Any]:
    cfg = _convergence(degree, mesh, nonlinear)
    cfg["experiment"] = "robustness"
    cfg["robustness_tests"] = [test]
    return cfg


def _geothermal(T_inj: float, t_final: float = 3.0, gamma: float = 0.01,
                write_every: int = 200) -> Dict[str, Any]:
    return {
        "experiment": "geothermal",
        "degree": 1,
        "nonlinear": True,
        "mesh": {"kind": "voronoi", "domain": SLAB, "sizes": [1000]},
        "time": {"theta": 1.0, "dt": 5e-4, "t_final": t_final, "steady": False},
        "geothermal": {"T_inj": T_inj, "T_ext": 120.0, "p_inj": 1.0, "p_ext": -1.0, "gamma": gamma},
        "output": {"write_every": write_every},
    }


PRESETS: Dict[str, Dict[str, Any]] = {
    "fig1-l1": _convergence(1, _LINEAR_L1, False),
    "fig2-l3": _convergence(3, _LINEAR_L3, False),
    "fig3-l2-nonlinear": _convergence(2, _NONLINEAR, True),
    "geothermal-a": _geothermal(60.0),
    "geothermal-b": _geothermal(120.0),
    "geothermal-a-low-exchange": _geothermal(60.0, gamma=1e-4),
    "geothermal-ci": _geothermal(60.0, t_final=0.1, write_every=50),
}
for _test in ("i", "ii", "iii"):
    PRESETS[f"table4-test-{_test}"] = _robustness(_test, 1, _LINEAR_L1, False)
    PRESETS[f"table5-test-{_test}"] = _robustness(_test, 3, _LINEAR_L3, False)
for _test in ("i", "ii", "iii", "iv"):
    PRESETS[f"table6-test-{_test}"] = _robustness(_test, 2, _NONLINEAR, True)


def preset_names() -> List[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> Dict[str, Any]:
    """Deep copy of a preset mapping"""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset: {name}", {"available": preset_names()})
    return copy.deepcopy(PRESETS[name])
