"""Run-config validation, presets and environment settings"""

import json

import pytest

from src.config import Settings, load_run_config, merge_config, parse_run_config
from src.errors import ConfigError
from src.presets import get_preset, preset_names


def test_defaults():
    cfg = parse_run_config({})
    assert cfg.experiment == "convergence"
    assert cfg.degree == 1
    assert cfg.time.theta == 0.5
    assert cfg.fixed_point.initial_guess == "previous_step"
    assert cfg.robustness_tests == ["i", "ii", "iii"]


@pytest.mark.parametrize("raw", [
    {"time": {"theta": 0.2}},
    {"time": {"dt": 0.3, "t_final": 1.0}},
    {"time": {"dt": -1.0}},
    {"degree": 1, "phi_degree": 3},
    {"mesh": {"sizes": [0]}},
    {"mesh": {"domain": [1.0, 0.0, 0.0, 1.0]}},
    {"mesh": {"kind": "file"}},
    {"fixed_point": {"tolerance": 0.0}},
    {"penalties": {"alpha2": -1.0}},
    {"coefficients": {"viscosity": 1.0}},
    {"unknown": True},
])
def test_invalid_configs_rejected(raw):
    with pytest.raises(ConfigError) as info:
        parse_run_config(raw)
    assert info.value.exit_code == 2
    assert info.value.details["errors"]


def test_phi_degree_may_exceed_by_one():
    assert parse_run_config({"degree": 1, "phi_degree": 2}).phi_degree == 2


def test_coefficient_overrides_drop_unset():
    cfg = parse_run_config({"coefficients": {"c_f": 1.0, "K": 0.5}})
    assert cfg.coefficients.as_dict() == {"c_f": 1.0, "K": 0.5}


def test_merge_is_recursive():
    merged = merge_config({"time": {"theta": 1.0, "dt": 0.1}, "degree": 2}, {"time": {"dt": 0.5}})
    assert merged == {"time": {"theta": 1.0, "dt": 0.5}, "degree": 2}


def test_file_layered_over_preset(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"mesh": {"sizes": [4]}, "output": {"vtk": False}}))
    cfg = load_run_config(path, get_preset("fig2-l3"))
    assert cfg.degree == 3
    assert cfg.mesh.kind == "voronoi"
    assert cfg.mesh.sizes == [4]
    assert cfg.output.vtk is False


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_run_config(bad)
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_run_config(listing)


def test_every_preset_validates():
    names = preset_names()
    assert "fig1-l1" in names and "geothermal-a" in names
    for name in names:
        cfg = parse_run_config(get_preset(name))
        assert cfg.experiment in ("convergence", "robustness", "geothermal")


def test_nonlinear_presets_use_short_horizon():
    cfg = parse_run_config(get_preset("table6-test-iv"))
    assert cfg.nonlinear
    assert cfg.robustness_tests == ["iv"]
    assert cfg.time.dt == 1e-4


def test_preset_copies_are_independent():
    first = get_preset("geothermal-a")
    first["geothermal"]["T_inj"] = 0.0
    assert get_preset("geothermal-a")["geothermal"]["T_inj"] == 60.0


def test_unknown_preset():
    with pytest.raises(ConfigError) as info:
        get_preset("fig9")
    assert "fig1-l1" in info.value.details["available"]


def test_environment_settings(monkeypatch):
    monkeypatch.setenv("TPE_JOBS", "4")
    monkeypatch.setenv("TPE_DUMP_MATRICES", "true")
    fresh = Settings()
    assert fresh.jobs == 4
    assert fresh.dump_matrices is True
    assert fresh.direct_solver == "splu"
