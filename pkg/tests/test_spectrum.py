import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from deepzero.errors import DegenerateDataError
from deepzero.generator import GeneratorSpec
from deepzero.spectrum import (BandExceededError, GeneratorPair, PeriodizationEvaluator, flat_zero_check,
                               flat_zero_report, fourier_eval, fourier_grid, gaussian_transform, periodize,
                               poisson_discrepancy, poisson_tolerance, polynomial_decay_report,
                               strip_decay_check, theta_identity_gap)


def quad_phi(x, a=1.0, b=1.0):
    """Independent oracle: adaptive quadrature per unit interval (the integrand is flat at integers)."""
    spec = GeneratorSpec(a, b)
    total = 0.0
    for k in range(12):
        v, _ = quad(lambda t: spec.value(t) * math.cos(2 * math.pi * t * x), k, k + 1,
                    epsabs=1e-15, epsrel=1e-13, limit=200)
        total += v
    return 2 * total


def test_phi_at_zero_matches_quad(gp):
    # the commonly quoted 0.3788 is off; independent quadrature gives 0.278787...
    assert fourier_eval(gp, 0.0) == pytest.approx(quad_phi(0.0), abs=1e-12)
    assert fourier_eval(gp, 0.0) == pytest.approx(0.27878715654612546, abs=1e-12)


@pytest.mark.parametrize("x", [0.25, 1.0, 2.5, 4.0])
def test_phi_matches_quad(gp, x):
    assert fourier_eval(gp, x) == pytest.approx(quad_phi(x), abs=1e-10)


def test_gaussian_mode_closed_form(gp_gauss):
    xs = np.linspace(-10, 10, 2001)
    err = np.max(np.abs(gp_gauss.fourier_grid(xs) - gaussian_transform(1.0, xs)))
    assert err <= gp_gauss.error_budget


def test_evenness_and_singleton(gp):
    xs = np.linspace(-20, 20, 333)
    assert np.array_equal(fourier_grid(gp, xs), fourier_grid(gp, -xs[::-1])[::-1])
    assert fourier_grid(gp, [0.0])[0] == fourier_eval(gp, 0.0)
    assert fourier_grid(gp, np.array([])).size == 0


def test_batching_is_bitwise_stable(gp):
    xs = np.linspace(-30, 30, 1001)
    whole = gp.fourier_grid(xs)
    parts = np.concatenate([gp.fourier_grid(xs[:7]), gp.fourier_grid(xs[7:500]), gp.fourier_grid(xs[500:])])
    assert np.array_equal(whole, parts)
    assert np.array_equal(gp.fourier_grid(xs.reshape(7, 143)).ravel(), whole)


def test_band_enforced(gp):
    assert gp.band == pytest.approx(124.0)
    with pytest.raises(BandExceededError):
        gp.fourier_grid([125.0])
    with pytest.raises(BandExceededError):
        gp.fourier_derivative_grid([-200.0])


def test_pair_validation():
    with pytest.raises(ValueError):
        GeneratorPair(truncation=3.0)
    with pytest.raises(ValueError):
        GeneratorPair(step=0.2)
    with pytest.raises(ValueError):
        GeneratorPair(error_budget=0.0)


def test_step_halving_changes_little(gp):
    fine = GeneratorPair(step=gp.step / 2)
    xs = np.linspace(-gp.band, gp.band, 997)
    assert np.max(np.abs(fine.fourier_grid(xs) - gp.fourier_grid(xs))) <= gp.error_budget / 10


def test_derivative_matches_difference(gp):
    xs = np.linspace(-5, 5, 41)
    h = 1e-5
    fd = (gp.fourier_grid(xs + h) - gp.fourier_grid(xs - h)) / (2 * h)
    assert np.max(np.abs(fd - gp.fourier_derivative_grid(xs))) < 1e-8
    assert np.max(np.abs(gp.fourier_derivative_grid(np.linspace(-40, 40, 4001)))) <= gp.derivative_sup_bound()


def test_periodize_values(spec):
    pe6 = PeriodizationEvaluator(spec, 6)
    assert periodize(pe6, 0.0) == 0.0
    direct = sum(math.exp(-(0.5 + k) ** 2 - 1.0) for k in range(-6, 7))
    assert periodize(pe6, 0.5) == pytest.approx(direct, rel=1e-14)


@given(st.floats(0.0, 1.0, exclude_max=True))
def test_periodicity_within_tail(t):
    pe = PeriodizationEvaluator(GeneratorSpec(), 8)
    # the shifted sum misses one term closer to t, so its own tail is the K - 1 bound
    bound = pe.tail_bound() + PeriodizationEvaluator(GeneratorSpec(), 7).tail_bound()
    # plus rounding: t + 1 is itself rounded and the summands are O(1)
    assert abs(periodize(pe, t) - periodize(pe, t + 1)) <= bound + 1e-15


def test_tail_bound_is_an_upper_bound(spec):
    pe = PeriodizationEvaluator(spec, 4)
    far = PeriodizationEvaluator(spec, 40)
    ts = np.linspace(0, 1, 101, endpoint=False)
    assert np.max(np.abs(far(ts) - pe(ts))) <= pe.tail_bound()


def test_poisson_within_derived_tolerance(gp, pe):
    ts = np.arange(50) / 50
    disc = poisson_discrepancy(gp, pe, ts, 32)
    assert np.max(disc) <= poisson_tolerance(gp, pe, 32)


@pytest.mark.parametrize("t", [0.0, 0.5])
def test_poisson_converges_with_more_terms(gp, pe, t):
    # phi(n) decays like exp(-c n^(2/3)), so n_max = 32 leaves ~1e-7; more terms close the gap
    assert poisson_discrepancy(gp, pe, t, 64) <= 1e-8


def test_poisson_gaussian_mode(gp_gauss):
    pe = PeriodizationEvaluator(gp_gauss.spec, 8)
    ts = np.arange(50) / 50
    assert np.max(poisson_discrepancy(gp_gauss, pe, ts, 32)) <= 1e-10
    assert np.max(theta_identity_gap(1.0, ts, 8, 32)) <= 1e-10


def test_flat_zero_passes(pe):
    rep = flat_zero_check(pe)
    assert rep.passed and rep.c2_hat > 0
    assert flat_zero_check(pe, ts=(0.5, 0.3, 0.1, 0.05, 0.02)).passed


def test_flat_zero_rejects_simple_zero():
    ts = np.array([0.3, 0.1, 0.05, 0.02])
    simple = ts * (2 + np.cos(2 * np.pi * ts))
    assert not flat_zero_report(ts, simple).passed


def test_flat_zero_rejects_gaussian():
    assert not flat_zero_check(PeriodizationEvaluator(GeneratorSpec(1.0, 0.0))).passed


def test_flat_zero_input_validation():
    with pytest.raises(ValueError):
        flat_zero_report([0.1], [1.0])
    with pytest.raises(ValueError):
        flat_zero_report([0.0, 0.1], [1.0, 1.0])
    with pytest.raises(DegenerateDataError):
        flat_zero_report([0.2, 0.1], [1.0, 0.0])


def test_strip_decay(gp, gp_gauss):
    xs = np.arange(1, 21, dtype=float)
    rep = strip_decay_check(gp, xs, 4.0)
    assert rep.passed and rep.slope <= -4
    assert strip_decay_check(gp_gauss, np.linspace(0.2, 3, 20), 4.0).passed
    assert not polynomial_decay_report(xs, 1 / (1 + xs**2), 4.0).passed
