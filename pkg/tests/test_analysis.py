"""Norms, rates, convergence tables and the inf-sup estimate"""

import math

import numpy as np
import pandas as pd
import pytest

from src.analysis import (
    ConvergenceTable,
    EnergyWeights,
    ErrorReport,
    convergence_study,
    dg_error,
    dg_norm,
    energy_norm,
    estimate_infsup,
    l2_error,
    l2_norm,
    roc,
    write_convergence_csv,
)
from src.assembly import assemble_dg_norm_matrix
from src.errors import AnalysisError
from src.mesh import Rectangle, generate_cartesian
from src.physics import convergence_case
from src.solver import SolutionState, ThetaScheme
from src.space import DgSpace, FieldId


def test_roc_matches_tabulated_rates():
    rates = roc([0.2152, 0.075634], [1.0 / 2.6707, 1.0 / 4.639])
    assert rates[0] == pytest.approx(1.89, abs=0.01)
    rates = roc([0.10736, 0.01792], [1.0 / 2.6707, 1.0 / 4.639])
    assert rates[0] == pytest.approx(3.24, abs=0.01)


def test_roc_of_exact_powers():
    h = [0.4, 0.2, 0.1]
    assert roc([hh ** 2 for hh in h], h) == pytest.approx([2.0, 2.0])


def test_roc_rejects_bad_input():
    with pytest.raises(AnalysisError):
        roc([1.0], [0.5])
    with pytest.raises(AnalysisError):
        roc([1.0, 0.0], [0.5, 0.25])
    with pytest.raises(AnalysisError):
        roc([1.0, 0.5], [0.25, 0.5])


@pytest.mark.parametrize("fid", [FieldId.U, FieldId.P, FieldId.T])
def test_dg_norm_matches_gram_matrix(voronoi12, coeffs, penalties, fid):
    space = DgSpace(voronoi12, 2)
    vec = np.random.default_rng(3).standard_normal(space.n_field_dofs(fid))
    G = assemble_dg_norm_matrix(fid, space, coeffs, penalties)
    assert dg_norm(fid, vec, space, coeffs, penalties) == pytest.approx(math.sqrt(vec @ (G @ vec)), rel=1e-10)


def test_dg_error_of_interpolated_linear_field(voronoi12, coeffs, penalties):
    space = DgSpace(voronoi12, 1)
    vec = space.project(FieldId.T, lambda x, y: 3.0 * x - y)
    err = dg_error(FieldId.T, lambda x, y, t: 3.0 * x - y,
                   lambda x, y, t: np.stack([np.full_like(x, 3.0), -np.ones_like(y)], axis=-1),
                   vec, space, coeffs, penalties)
    assert err < 1e-10


def test_l2_norm_of_unit_field(space_l1):
    ones = space_l1.project(FieldId.PHI, lambda x, y: np.ones_like(x))
    assert l2_norm(FieldId.PHI, ones, space_l1) == pytest.approx(1.0)
    assert l2_error(FieldId.PHI, lambda x, y, t: np.ones_like(x), ones, space_l1) < 1e-12


def test_energy_norm(space_l1, coeffs, penalties):
    zero = np.zeros
    state = SolutionState(0.0, zero(space_l1.n_field_dofs(FieldId.U)), zero(12), zero(12), zero(12))
    assert energy_norm(state, EnergyWeights(), space_l1, coeffs, penalties) == 0.0
    state.T = space_l1.project(FieldId.T, lambda x, y: np.ones_like(x))
    expected = math.sqrt(coeffs.a0 - coeffs.b0)
    assert energy_norm(state, EnergyWeights(), space_l1, coeffs, penalties) == pytest.approx(expected)


def test_energy_weights_validation(coeffs):
    with pytest.raises(AnalysisError):
        EnergyWeights(infsup_B=-2.0, d0=1.0)
    assert EnergyWeights.for_coefficients(coeffs).d0 == 0.0


def test_error_report_rejects_negative():
    with pytest.raises(AnalysisError):
        ErrorReport(10, 0.5, 1, -1.0, 0.1, 0.1, 0.1, 0.1)


def _report(h, scale):
    return ErrorReport(n_cells=int(4 / h ** 2), h=h, degree=1, err_u_dg=scale * h,
                       err_p_l2=scale * h ** 2, err_T_l2=scale * h ** 2,
                       err_p_dg=scale * h, err_T_dg=scale * h)


def test_convergence_table_frame(tmp_path):
    table = ConvergenceTable("synthetic", [_report(0.5, 2.0), _report(0.25, 2.0)])
    frame = table.to_frame()
    assert list(frame["n_cells"]) == [16, 64]
    assert math.isnan(frame["roc_u_dg"][0])
    assert frame["roc_u_dg"][1] == pytest.approx(1.0)
    assert frame["roc_p_l2"][1] == pytest.approx(2.0)
    assert table.final_rates()["err_T_l2"] == pytest.approx(2.0)

    path = write_convergence_csv(table, tmp_path / "table.csv")
    loaded = pd.read_csv(path)
    assert loaded["err_u_dg"].tolist() == pytest.approx([1.0, 0.5])
    assert "mean_fp_iterations" in loaded.columns


def test_infsup_estimate_positive(grid2):
    value = estimate_infsup(DgSpace(grid2, 1))
    assert np.isfinite(value)
    assert value > 0.0


def test_infsup_estimate_bounded_under_refinement(unit_square):
    values = [estimate_infsup(DgSpace(generate_cartesian(unit_square, n, n), 1)) for n in (2, 4, 8)]
    assert min(values) > 0.0
    assert min(values) / max(values) > 0.5


def test_study_requires_refinement():
    rect = Rectangle(0.0, 2.0, 0.0, 2.0)
    meshes = [generate_cartesian(rect, 4, 4), generate_cartesian(rect, 2, 2)]
    with pytest.raises(AnalysisError):
        convergence_study(convergence_case(steady=True), meshes, 1, ThetaScheme.steady())


def test_steady_errors_decrease():
    rect = Rectangle(0.0, 2.0, 0.0, 2.0)
    meshes = [generate_cartesian(rect, n, n) for n in (4, 8)]
    levels = []
    table = convergence_study(convergence_case(steady=True), meshes, 1, ThetaScheme.steady(),
                              on_level=lambda level, stepper, state: levels.append(level))
    assert levels == [0, 1]
    first, second = table.reports
    for col in ("err_u_dg", "err_p_l2", "err_T_l2", "err_p_dg", "err_T_dg"):
        assert getattr(second, col) < getattr(first, col), col


@pytest.mark.slow
def test_steady_rates_linear_elements():
    rect = Rectangle(0.0, 2.0, 0.0, 2.0)
    meshes = [generate_cartesian(rect, n, n) for n in (8, 16, 32)]
    table = convergence_study(convergence_case(steady=True), meshes, 1, ThetaScheme.steady())
    rates = table.final_rates()
    assert rates["err_u_dg"] > 0.8
    assert rates["err_T_dg"] > 0.8
    assert rates["err_p_l2"] > 1.6
    assert rates["err_T_l2"] > 1.6
