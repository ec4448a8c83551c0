"""Unit tests for the averaging machinery.

The interaction-coefficient value -1/2 for the (sin, cos) pair at unit
exponent sum is the analytic anchor; everything else is checked against
finite-difference oracles or deliberately broken inputs.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from dithersim import (
    AffineSystem,
    DitherSignal,
    PlantParams,
    QuadratureError,
    State,
    build_averaged_rhs,
    fd_jacobian,
    gamma_coefficient,
    lie_bracket,
    lie_bracket_rhs,
    proposed_design_system,
    swapped_design_system,
    check_assumptions,
)

PLANT = PlantParams(10.0, -2.0)
SINE = DitherSignal.sine()
COSINE = DitherSignal.cosine()


# -- interaction coefficients ----------------------------------------------------


def test_gamma_sin_cos_is_minus_half():
    for omega in (1.0, 400.0):
        assert abs(gamma_coefficient(SINE, COSINE, omega) - (-0.5)) <= 1e-8


def test_gamma_swapped_order_is_plus_half():
    assert abs(gamma_coefficient(COSINE, SINE, 1.0) - 0.5) <= 1e-8


def test_gamma_antisymmetry():
    g12 = gamma_coefficient(SINE, COSINE, 1.0)
    g21 = gamma_coefficient(COSINE, SINE, 1.0)
    assert abs(g12 + g21) <= 1e-8


def test_gamma_equal_signals_vanish():
    g1 = gamma_coefficient(SINE, SINE, 1.0)
    g400 = gamma_coefficient(SINE, SINE, 400.0)
    assert abs(g1) <= 1e-8
    assert abs(g1 - g400) <= 1e-8


def test_gamma_rejects_bad_omega():
    with pytest.raises(ValueError):
        gamma_coefficient(SINE, COSINE, 0.0)
    with pytest.raises(ValueError):
        gamma_coefficient(SINE, COSINE, -3.0)


def test_gamma_reports_non_convergent_quadrature():
    """A panel budget too small to resolve the pair must refuse loudly."""
    with pytest.raises(QuadratureError):
        gamma_coefficient(SINE, COSINE, 1.0, panels_per_period=4)


def test_gamma_rational_frequency_multiplier():
    """A freq-2 channel against freq-1 shares the period of the slower one."""
    fast = DitherSignal(np.sin, freq=Fraction(2))
    g = gamma_coefficient(fast, COSINE, 1.0)
    assert math.isfinite(g)


# -- dither-signal validation ----------------------------------------------------


def test_dither_signal_validation():
    with pytest.raises(ValueError):
        DitherSignal(np.sin, freq=Fraction(0))
    with pytest.raises(ValueError):
        DitherSignal(np.sin, exponent=0.0)
    with pytest.raises(ValueError):
        DitherSignal(np.sin, exponent=1.0)


def test_affine_system_requires_matching_counts():
    sys = proposed_design_system(PLANT)
    with pytest.raises(ValueError):
        AffineSystem(sys.drift, sys.fields, (SINE,))


# -- finite-difference geometry ----------------------------------------------------


def test_fd_jacobian_on_polynomial_map():
    def f(x, t):
        return np.array([x[0] * x[0] * x[1], x[0] + 3.0 * x[1] * x[1]])

    x = np.array([1.5, -2.0])
    got = fd_jacobian(f, x, 0.0)
    expected = np.array([[2.0 * 1.5 * -2.0, 1.5**2], [1.0, 6.0 * -2.0]])
    np.testing.assert_allclose(got, expected, rtol=1e-8, atol=1e-8)


def test_lie_bracket_frozen_value():
    # [f1, f2] = (0, -2*b*x0^2) for these fields; b=-2, x0=3 gives 36
    b = -2.0

    def f1(x, t):
        return np.array([-b * x[0], 0.0])

    def f2(x, t):
        return np.array([0.0, x[0] * x[0]])

    got = lie_bracket(f1, f2, np.array([3.0, 7.0]), 0.0)
    np.testing.assert_allclose(got, [0.0, 36.0], rtol=1e-7, atol=1e-7)


def test_lie_bracket_self_vanishes():
    sys = proposed_design_system(PLANT)
    rng = np.random.default_rng(17)
    for f in (sys.drift, *sys.fields):
        x = rng.uniform(-3.0, 3.0, size=2)
        np.testing.assert_allclose(lie_bracket(f, f, x, 0.0), [0.0, 0.0], atol=1e-8)


def test_lie_bracket_bilinearity():
    sys = proposed_design_system(PLANT)
    f1, f2 = sys.fields
    rng = np.random.default_rng(29)
    for alpha in (2.0, -3.0):

        def scaled(x, t, a=alpha):
            return a * f1(x, t)

        for _ in range(5):
            x = rng.uniform(-3.0, 3.0, size=2)
            lhs = lie_bracket(scaled, f2, x, 0.0)
            rhs = alpha * lie_bracket(f1, f2, x, 0.0)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-5, atol=1e-5)


# -- averaged right-hand side -------------------------------------------------------


def test_averaged_rhs_matches_closed_form_both_designs():
    """The numeric average reproduces (a-bk)y, by^2 for either design."""
    rng = np.random.default_rng(41)
    for build in (proposed_design_system, swapped_design_system):
        avg = build_averaged_rhs(build(PLANT))
        for _ in range(10):
            y, k = rng.uniform(-5.0, 5.0, size=2)
            want = lie_bracket_rhs(PLANT, State(float(y), float(k)))
            got = avg(np.array([y, k]), 0.0)
            np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-7)


def test_averaged_rhs_single_field_is_drift():
    sys = proposed_design_system(PLANT)
    single = AffineSystem(sys.drift, (sys.fields[0],), (SINE,))
    avg = build_averaged_rhs(single)
    x = np.array([1.2, -0.7])
    np.testing.assert_allclose(avg(x, 0.0), sys.drift(x, 0.0), rtol=0, atol=0)


def test_averaged_rhs_identical_fields_cancel():
    def zero_drift(x, t):
        return np.zeros(2)

    def f(x, t):
        return np.array([x[0], x[0] * x[1]])

    sys = AffineSystem(zero_drift, (f, f), (SINE, COSINE))
    avg = build_averaged_rhs(sys)
    np.testing.assert_allclose(avg(np.array([2.0, 3.0]), 0.0), [0.0, 0.0], atol=1e-8)


def test_averaged_rhs_refuses_frequency_dependent_pairs():
    sys = proposed_design_system(PLANT)
    bad = AffineSystem(
        sys.drift,
        sys.fields,
        (DitherSignal(np.sin, exponent=0.3), COSINE),
    )
    with pytest.raises(ValueError, match="frequency-dependent"):
        build_averaged_rhs(bad)


# -- assumption checks ----------------------------------------------------------------


def test_assumption_report_passes_for_proposed_design(proposed_assumption_report):
    report = proposed_assumption_report
    assert report.passed
    assert report.a1_passed and report.a2_passed and report.a3_passed
    for check in report.a1:
        assert check.sup <= 1.0 + 1e-9
        assert check.period_defect <= 1e-12
        assert abs(check.mean) <= 1e-9


def test_assumption_bound_regression_value(proposed_assumption_report):
    """Frozen at first validated run; analytically sqrt(112^2 + 16^2)."""
    report = proposed_assumption_report
    assert math.isclose(report.a2_bound, 113.13708638639062, rel_tol=1e-6)
    assert report.a2_witness["norm"] == "dx_lie"
    assert set(report.a2_witness) == {"norm", "i", "j", "x", "t"}


def test_assumption_a3_vacuous_for_unit_exponent_sum(proposed_assumption_report):
    for entry in proposed_assumption_report.a3_pairs:
        assert not entry["triggered"]
        assert entry["satisfied"]
        assert entry["reason"] == "vacuous"
    for entry in proposed_assumption_report.a3_triples:
        assert not entry["triggered"]
        assert entry["satisfied"]


def test_assumption_report_serializes(proposed_assumption_report):
    import json

    blob = json.dumps(proposed_assumption_report.to_dict())
    assert "a2_bound" in blob


def test_biased_dither_fails_zero_mean():
    sys = proposed_design_system(PLANT)
    biased = AffineSystem(
        sys.drift,
        sys.fields,
        (DitherSignal(lambda ph: np.sin(ph) + 0.5), COSINE),
    )
    report = check_assumptions(
        biased, ((-2.0, 2.0), (-2.0, 2.0)), grid=5, time_samples=3, phase_points=2000
    )
    assert not report.a1_passed
    assert not report.passed
    assert not report.a1[0].zero_mean
    assert math.isclose(report.a1[0].mean, 0.5, abs_tol=1e-3)


def test_oversized_dither_fails_bound():
    sys = proposed_design_system(PLANT)
    loud = AffineSystem(
        sys.drift,
        sys.fields,
        (DitherSignal(lambda ph: 1.5 * np.sin(ph)), COSINE),
    )
    report = check_assumptions(
        loud, ((-1.0, 1.0), (-1.0, 1.0)), grid=4, time_samples=2, phase_points=2000
    )
    assert not report.a1[0].bounded
    assert math.isclose(report.a1[0].sup, 1.5, rel_tol=1e-6)


def test_aperiodic_dither_fails_period_check():
    sys = proposed_design_system(PLANT)
    drifting = AffineSystem(
        sys.drift,
        sys.fields,
        (DitherSignal(lambda ph: np.sin(ph) + 1e-3 * ph), COSINE),
    )
    report = check_assumptions(
        drifting, ((-1.0, 1.0), (-1.0, 1.0)), grid=4, time_samples=2, phase_points=2000
    )
    assert not report.a1[0].periodic


def test_high_exponents_trigger_and_fail_a3():
    """Exponents 0.7 make the pair and triple conditions bite; the shipped
    fields violate both, and the report must say so."""
    sys = proposed_design_system(PLANT)
    hot = AffineSystem(
        sys.drift,
        sys.fields,
        (
            DitherSignal(np.sin, exponent=0.7),
            DitherSignal(np.cos, exponent=0.7),
        ),
    )
    report = check_assumptions(
        hot, ((-1.0, 1.0), (-1.0, 1.0)), grid=4, time_samples=2, phase_points=2000
    )
    assert not report.a3_passed
    assert any(e["triggered"] and not e["satisfied"] for e in report.a3_pairs)
    assert any(e["triggered"] and not e["satisfied"] for e in report.a3_triples)
    assert report.a1_passed
