import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deepzero.errors import DegenerateDataError, UnsupportedOrderError
from deepzero.generator import (DeepZeroProfile, GeneratorSpec, SyntheticEnvelope, dist_to_integers,
                                eval_phi_derivative, eval_phi_time, fit_envelope, verify_deep_zero)

GRID = np.linspace(-8, 8, 2000)


def phi_second_closed(t, a=1.0, b=1.0):
    # Phi'' = Phi (L'^2 + L''),  L = -a t^2 - b / sin^2(pi t)
    s, c = np.sin(np.pi * t), np.cos(np.pi * t)
    L1 = -2 * a * t + 2 * np.pi * b * c / s**3
    L2 = -2 * a - 2 * np.pi**2 * b * (s * s + 3 * c * c) / s**4
    return np.exp(-a * t * t - b / s**2) * (L1 * L1 + L2)


@pytest.mark.parametrize("t, d", [(2.7, 0.3), (5.0, 0.0), (-0.5, 0.5), (0.0, 0.0), (-3.25, 0.25)])
def test_dist_to_integers(t, d):
    assert dist_to_integers(t) == pytest.approx(d, abs=1e-15)


def test_dist_to_integers_rejects_nonfinite():
    with pytest.raises(ValueError):
        dist_to_integers(np.nan)
    with pytest.raises(ValueError):
        dist_to_integers([0.1, np.inf])


def test_phi_values(spec):
    assert eval_phi_time(spec, 0.5) == pytest.approx(math.exp(-1.25), rel=1e-15)
    # sin^2(pi/4) = 1/2, so the flat factor is e^{-2}
    assert eval_phi_time(spec, 0.25) == pytest.approx(math.exp(-0.0625 - 2.0), rel=1e-14)
    assert eval_phi_time(spec, 3.0) == 0.0
    assert eval_phi_time(spec, 3.0 + 1e-9) == 0.0


def test_phi_first_derivative_values(spec):
    assert eval_phi_derivative(spec, 0.5, 1) == pytest.approx(-math.exp(-1.25), rel=1e-12)
    for n in range(-4, 5):
        assert eval_phi_derivative(spec, float(n), 1) == 0.0


@given(st.floats(-7.5, 7.5))
def test_phi_even_and_positive(t):
    spec = GeneratorSpec()
    assert spec.value(t) == spec.value(-t)
    assert spec.first_derivative(t) == -spec.first_derivative(-t)
    if dist_to_integers(t) > 0.02:
        assert spec.value(t) > 0


def test_first_derivative_matches_central_difference(spec):
    t = np.linspace(-4, 4, 801)
    t = t[dist_to_integers(t) >= 0.05]
    h = 1e-6
    fd = (spec.value(t + h) - spec.value(t - h)) / (2 * h)
    exact = spec.first_derivative(t)
    big = np.abs(exact) > 1e-6 * np.max(np.abs(exact))
    assert np.max(np.abs(fd[big] - exact[big]) / np.abs(exact[big])) <= 1e-6


def test_second_derivative_matches_closed_form(spec):
    t = np.linspace(0.06, 2.94, 300)
    t = t[dist_to_integers(t) >= 0.06]
    exact = phi_second_closed(t)
    approx = spec.derivative(t, 2)
    assert np.max(np.abs(approx - exact)) <= 1e-6 * np.max(np.abs(exact))


def test_derivative_order_limits(spec):
    with pytest.raises(UnsupportedOrderError):
        spec.derivative(0.3, 7)
    with pytest.raises(UnsupportedOrderError):
        spec.derivative(0.3, -1)
    assert spec.derivative(0.3, 0) == spec.value(0.3)


def test_generator_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec(0.0, 1.0)
    with pytest.raises(ValueError):
        GeneratorSpec(1.0, -1.0)
    assert GeneratorSpec(1.0, 0.0).gaussian_mode
    with pytest.raises(ValueError):
        GeneratorSpec().value(np.nan)


def test_profile_validation_and_symmetry():
    with pytest.raises(ValueError):
        DeepZeroProfile(0.0, 1.0)
    with pytest.raises(ValueError):
        DeepZeroProfile(1.0, -1.0)
    prof = DeepZeroProfile(3.0, 0.2)
    t = np.linspace(0.01, 5, 300)
    assert np.array_equal(prof.envelope(t), prof.envelope(-t))


def test_verify_profile_from_analytic_bound(spec):
    grid = np.linspace(-6, 6, 4001)
    grid = grid[dist_to_integers(grid) > 0]
    rep = verify_deep_zero(spec, DeepZeroProfile(3.0, 0.2), grid, 0)
    assert rep.passed
    assert rep.max_ratio[0] < 1


def test_verify_fails_for_huge_c2(spec):
    rep = verify_deep_zero(spec, DeepZeroProfile(3.0, 100.0), GRID, 0)
    assert not rep.passed
    assert rep.max_ratio[0] > 1


def test_verify_fails_for_gaussian():
    gauss = GeneratorSpec(1.0, 0.0)
    grid = np.linspace(-3, 3, 601)
    rep = verify_deep_zero(gauss, DeepZeroProfile(1e6, 0.05), grid, 0)
    assert not rep.passed
    assert dist_to_integers(rep.argmax[0]) < 0.01


def test_verify_empty_grid(spec):
    with pytest.raises(ValueError):
        verify_deep_zero(spec, DeepZeroProfile(1.0, 1.0), [], 0)


def test_fit_recovers_synthetic_envelope():
    synth = SyntheticEnvelope(2.0, 0.4)
    grid = np.linspace(-6, 6, 1501)
    for prof in (fit_envelope(synth, grid), fit_envelope(synth, grid, c1_max=2.0)):
        assert prof.c1 == pytest.approx(2.0, rel=1e-2)
        assert prof.c2 == pytest.approx(0.4, rel=1e-2)


def test_fit_default_generator(spec):
    prof = fit_envelope(spec, GRID, derivative_order=2)
    assert prof.c2 >= 0.19
    assert verify_deep_zero(spec, prof, GRID, 2).passed


def test_fit_capped_mode(spec):
    prof = fit_envelope(spec, GRID, derivative_order=2, c1_max=100.0)
    assert prof.c1 <= 100.0 * (1 + 1e-9)
    assert verify_deep_zero(spec, prof, GRID, 2).passed


def test_fit_excluding_near_integer_region_raises_c2(spec):
    full = np.linspace(-6, 6, 3001)
    far = full[dist_to_integers(full) > 0.15]
    cap = 100.0
    assert fit_envelope(spec, far, c1_max=cap).c2 > fit_envelope(spec, full, c1_max=cap).c2


@given(st.integers(200, 800), st.integers(2, 4))
def test_capped_fit_monotone_under_refinement(n, k):
    spec = GeneratorSpec()
    coarse = np.linspace(-6, 6, n)
    fine = np.linspace(-6, 6, k * (n - 1) + 1)  # contains the coarse grid
    assert fit_envelope(spec, fine, c1_max=50.0).c2 <= fit_envelope(spec, coarse, c1_max=50.0).c2 * (1 + 1e-12)


def test_fit_degenerate(spec):
    with pytest.raises(ValueError):
        fit_envelope(spec, [0.3])
    with pytest.raises(DegenerateDataError):
        fit_envelope(spec, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("delta", [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
def test_flatness_near_integers(spec, delta):
    prof = fit_envelope(spec, GRID, derivative_order=4)
    n = np.arange(-7, 8, dtype=float)
    pts = np.concatenate([n + delta, n - delta])
    assert verify_deep_zero(spec, prof, pts, 4).passed
