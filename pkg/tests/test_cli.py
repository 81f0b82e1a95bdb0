"""Command line: exit codes and output files of tiny runs"""

import json

import pandas as pd
import pytest

from src.cli import main
from src.mesh import load_mesh


def _write_config(tmp_path, data):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return str(path)


def _stderr_report(capsys):
    """The JSON error line among the log records on stderr"""
    lines = [ln for ln in capsys.readouterr().err.splitlines() if ln.startswith("{")]
    assert len(lines) == 1
    return json.loads(lines[0])


def test_presets_listed(capsys):
    assert main(["presets"]) == 0
    names = capsys.readouterr().out.split()
    assert "fig1-l1" in names
    assert "geothermal-ci" in names


def test_mesh_command(tmp_path, capsys):
    path = tmp_path / "grid.json"
    assert main(["mesh", "--cartesian", "2x3", "--domain", "0,4,0,1", "--out", str(path)]) == 0
    mesh = load_mesh(path)
    assert mesh.n_cells == 6
    assert "cells=6" in capsys.readouterr().out


def test_mesh_command_rejects_bad_shape(tmp_path):
    assert main(["mesh", "--cartesian", "two-by-two", "--out", str(tmp_path / "m.json")]) == 2


def test_invalid_config_exit_code(tmp_path, capsys):
    out = tmp_path / "out"
    config = _write_config(tmp_path, {"time": {"theta": 0.2}})
    assert main(["run", "--config", config, "--out", str(out)]) == 2
    report = json.loads((out / "error.json").read_text())
    assert report["error"] == "ConfigError"
    assert _stderr_report(capsys)["error"] == "ConfigError"


def test_preset_experiment_mismatch(tmp_path):
    assert main(["geothermal", "--preset", "fig1-l1", "--out", str(tmp_path)]) == 2


def test_inadmissible_coefficients_exit_code(tmp_path):
    config = _write_config(tmp_path, {
        "mesh": {"kind": "cartesian", "sizes": [2, 4]},
        "time": {"steady": True, "theta": 1.0},
        "coefficients": {"a0": 0.001},
        "output": {"vtk": False},
    })
    assert main(["convergence", "--config", config, "--out", str(tmp_path / "out")]) == 3
    report = json.loads((tmp_path / "out" / "error.json").read_text())
    assert report["error"] == "CoefficientError"


def test_tiny_convergence_run(tmp_path):
    out = tmp_path / "conv"
    config = _write_config(tmp_path, {
        "mesh": {"kind": "cartesian", "sizes": [2, 4]},
        "time": {"steady": True, "theta": 1.0},
        "output": {"vtk": False},
    })
    assert main(["convergence", "--config", config, "--out", str(out)]) == 0
    table = pd.read_csv(out / "convergence.csv")
    assert list(table["n_cells"]) == [4, 16]
    assert (table["err_u_dg"] > 0).all()
    saved = json.loads((out / "config.json").read_text())
    assert saved["experiment"] == "convergence"
    assert saved["mesh"]["sizes"] == [2, 4]
    assert (out / "diagnostics_convergence.csv").exists()


def test_tiny_geothermal_run(tmp_path, capsys):
    out = tmp_path / "geo"
    config = _write_config(tmp_path, {
        "experiment": "geothermal",
        "mesh": {"kind": "cartesian", "domain": [0.0, 4.0, 0.0, 1.0], "sizes": [2]},
        "nonlinear": False,
        "time": {"theta": 1.0, "dt": 5e-4, "t_final": 1e-3},
        "output": {"vtk": True, "write_every": 1},
    })
    assert main(["run", "--config", config, "--out", str(out)]) == 0
    probes = pd.read_csv(out / "probes.csv")
    assert len(probes) == 41 * 2
    assert sorted(probes["step"].unique()) == [1, 2]
    assert probes["x"].min() == pytest.approx(0.0)
    assert probes["x"].max() == pytest.approx(4.0)
    diagnostics = pd.read_csv(out / "diagnostics.csv")
    assert list(diagnostics["step"]) == [1, 2]
    assert (out / "fields_000002.vtk").exists()
    assert "mean fixed-point iterations" in capsys.readouterr().out


def test_tiny_robustness_run_skips_nonlinear_only_test(tmp_path):
    out = tmp_path / "rob"
    config = _write_config(tmp_path, {
        "mesh": {"kind": "cartesian", "sizes": [2, 4]},
        "time": {"steady": True, "theta": 1.0},
        "robustness_tests": ["ii", "iv"],
        "output": {"vtk": False},
    })
    assert main(["robustness", "--config", config, "--out", str(out)]) == 0
    table = pd.read_csv(out / "robustness_ii.csv")
    assert len(table) == 2
    assert not (out / "robustness_iv.csv").exists()


def test_unordered_mesh_levels_exit_code(tmp_path, capsys):
    out = tmp_path / "out"
    config = _write_config(tmp_path, {
        "mesh": {"kind": "cartesian", "sizes": [4, 2]},
        "time": {"steady": True, "theta": 1.0},
        "output": {"vtk": False},
    })
    assert main(["convergence", "--config", config, "--out", str(out)]) == 3
    report = json.loads((out / "error.json").read_text())
    assert report["error"] == "AnalysisError"
    assert _stderr_report(capsys)["error"] == "AnalysisError"
