"""Coefficient checks, penalties, boundary data and manufactured forcing"""

import numpy as np
import pytest

from src.errors import AssemblyError, CoefficientError
from src.physics import (
    BoundaryConditions,
    CoefficientViolation,
    Dirichlet,
    Neumann,
    PenaltyKind,
    PenaltyParams,
    Robin,
    baseline_coefficients,
    constant_scalar,
    convergence_case,
    d0,
    derive_storage_coefficients,
    geothermal_case,
    homogeneous_dirichlet,
    penalty_value,
    robustness_cases,
    strong_residual,
    validate,
)


def test_convergence_coefficients_admissible(coeffs):
    report = validate(coeffs)
    assert report.ok
    report.raise_if_failed()


def test_all_violations_reported(coeffs):
    bad = coeffs.with_overrides({"b0": -1.0, "lam": 0.0})
    report = validate(bad)
    assert not report.ok
    assert CoefficientViolation.NEGATIVE_B0 in report.violations
    assert CoefficientViolation.LAMBDA_NOT_POSITIVE in report.violations
    with pytest.raises(CoefficientError):
        report.raise_if_failed()


def test_storage_ordering(coeffs):
    report = validate(coeffs.with_overrides({"a0": 0.005}))
    assert report.violations == [CoefficientViolation.A0_BELOW_B0]


def test_non_spd_permeability(coeffs):
    report = validate(coeffs.with_overrides({"K": -1.0}))
    assert CoefficientViolation.K_NOT_SPD in report.violations


def test_scalar_override_becomes_isotropic(coeffs):
    updated = coeffs.with_overrides({"Theta": 2.0})
    assert np.array_equal(updated.Theta_cell(0), 2.0 * np.eye(2))


def test_derived_storage_coefficients():
    derived = derive_storage_coefficients(porosity=0.2, K_s=60.0, K_f=2.0, a_f=0.01,
                                          beta=0.1, lam=5.0, mu=1.0)
    assert derived.alpha == pytest.approx(0.9)
    assert derived.c0 == pytest.approx(0.7 / 60.0 + 0.1)
    assert derived.b0 == pytest.approx(0.1 * 0.7 / 6.0 + 0.002)
    assert derived.report.ok


def test_porosity_must_stay_below_alpha():
    with pytest.raises(CoefficientError):
        derive_storage_coefficients(porosity=0.5, K_s=6.5, K_f=2.0, a_f=0.0,
                                    beta=0.1, lam=5.0, mu=1.0)


def test_d0_without_porosity_is_zero(coeffs):
    assert d0(coeffs) == 0.0


def test_diffusive_penalty_takes_larger_side():
    value = penalty_value(PenaltyKind.HEAT, PenaltyParams(), 2, 0.5, 0.05, 0.25, 0.05)
    assert value == pytest.approx(8.0)


def test_phi_penalty_takes_smaller_side():
    value = penalty_value(PenaltyKind.PSTAB, PenaltyParams(), 2, 0.5, 1.0, 0.25, 1.0)
    assert value == pytest.approx(0.125)
    assert penalty_value(PenaltyKind.PSTAB, PenaltyParams(), 0, 0.5) == pytest.approx(0.5)


def test_penalty_multipliers_positive():
    with pytest.raises(CoefficientError):
        PenaltyParams(alpha1=0.0)


def test_robin_only_for_temperature():
    zero = constant_scalar(0.0)
    with pytest.raises(CoefficientError):
        BoundaryConditions(displacement={}, pressure={1: Robin(1.0, zero)}, temperature={})


def test_missing_tag_detected():
    bcs = homogeneous_dirichlet(tags=(1, 2, 3))
    with pytest.raises(AssemblyError):
        bcs.check_tags({1, 2, 3, 4})


@pytest.mark.parametrize("c_f", [0.0, 1.0])
def test_manufactured_forcing_balances(c_f):
    case = convergence_case(baseline_coefficients(c_f=c_f))
    x = np.array([0.3, 0.9, 1.45])
    y = np.array([0.7, 1.2, 0.35])
    residual = strong_residual(case, x, y, 0.5)
    scale = 1.0 + np.abs(case.H(x, y, 0.5)).max() + np.abs(case.f(x, y, 0.5)).max()
    for name, values in residual.items():
        assert np.abs(values).max() < 1e-5 * scale, name


def test_steady_forcing_balances():
    case = convergence_case(steady=True)
    residual = strong_residual(case, np.array([0.4]), np.array([1.3]), 1.0)
    for values in residual.values():
        assert np.abs(values).max() < 1e-5 * (1.0 + np.abs(case.g(0.4, 1.3, 1.0)))


def test_exact_fields_vanish_at_rest_and_on_boundary():
    ex = convergence_case().exact
    x = np.array([0.0, 2.0, 0.7, 1.1])
    y = np.array([0.4, 1.3, 0.0, 2.0])
    for fn in (ex.p, ex.T):
        assert fn(x, y, 0.8) == pytest.approx(np.zeros(4), abs=1e-12)
    assert ex.u(np.array([0.5]), np.array([0.5]), 0.0) == pytest.approx(np.zeros((1, 2)))


def test_robustness_sets():
    tests = {t.name: t for t in robustness_cases()}
    assert sorted(tests) == ["i", "ii", "iii", "iv"]
    assert tests["iv"].nonlinear_only
    assert tests["i"].coefficients.lam == 5e6
    assert tests["ii"].coefficients.K_cell(0)[0, 0] == pytest.approx(2e-7)
    for test in tests.values():
        assert validate(test.coefficients).ok


def test_geothermal_boundary_layout():
    case = geothermal_case(T_inj=60.0, gamma=0.01)
    assert isinstance(case.bcs.temperature[4], Dirichlet)
    assert case.bcs.temperature[4].value(0.0, 0.5, 0.0) == pytest.approx(60.0)
    assert isinstance(case.bcs.temperature[1], Robin)
    assert case.bcs.temperature[1].gamma == 0.01
    assert isinstance(case.bcs.pressure[3], Neumann)
    assert case.bcs.pressure[2].value(4.0, 0.5, 0.0) == pytest.approx(-1.0)
    assert case.nonlinear
