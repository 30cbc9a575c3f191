import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deepzero.errors import DegenerateDataError
from deepzero.lattice import (SCHEMES, PerturbedLattice, decay_fit, integer_lattice, lattice_from_text,
                              make_lattice, mean_value_gap_check, rolle_points, truncate_lattice,
                              validate_lattice)

def _resolvable(args):
    m, _, c, r, _ = args
    return c * r**m / 4 > 4 * np.spacing(float(m))


lattice_args = st.tuples(st.integers(1, 30), st.sampled_from(SCHEMES), st.floats(0.05, 0.95),
                         st.floats(0.05, 0.95), st.integers(0, 2**31)).filter(_resolvable)


def test_alternating_example():
    lat = make_lattice(2, "alternating", 0.5, 0.5)
    assert np.array_equal(lat.indices, np.arange(-2, 3))
    assert np.allclose(lat.perturbations, [0.0625, -0.125, 0.25, -0.125, 0.0625], atol=1e-16, rtol=0)


def test_constant_scheme_sign():
    lat = make_lattice(4, "constant", 0.4, 0.3)
    assert np.all(lat.perturbations > 0)


@given(lattice_args)
def test_make_lattice_invariants(args):
    m, scheme, c, r, seed = args
    lat = make_lattice(m, scheme, c, r, seed)
    assert validate_lattice(lat)
    assert np.all(lat.perturbations != 0)
    assert np.all(np.abs(lat.perturbations) < c * r ** np.abs(lat.indices))
    assert np.all(np.diff(lat.points) > 0)


def test_random_scheme_many_seeds():
    for seed in range(1000):
        lat = make_lattice(8, "random", 0.5, 0.5, seed)
        assert validate_lattice(lat)
        a, bound = np.abs(lat.perturbations), 0.5 * 0.5 ** np.abs(lat.indices)
        assert np.all(a >= bound / 4) and np.all(a <= bound / 2)


@given(lattice_args, st.integers(0, 30))
def test_lattices_nest(args, k):
    m, scheme, c, r, seed = args
    small = min(k, m)
    big = make_lattice(m, scheme, c, r, seed)
    if small >= 1:
        assert np.array_equal(truncate_lattice(big, small).points, make_lattice(small, scheme, c, r, seed).points)


def test_same_seed_identical_different_seed_differs():
    a = make_lattice(10, "random", seed=3)
    b = make_lattice(10, "random", seed=3)
    c = make_lattice(10, "random", seed=4)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


@pytest.mark.parametrize("kwargs", [dict(m=0), dict(m=3, c=1.0), dict(m=3, r=1.0), dict(m=3, r=0.0),
                                    dict(m=3, c=-0.1), dict(m=3, scheme="spiral"),
                                    dict(m=16, r=0.125)])
def test_make_lattice_rejects(kwargs):
    with pytest.raises(ValueError):
        make_lattice(**kwargs)


@given(lattice_args)
def test_text_round_trip(args):
    lat = make_lattice(*args)
    back = lattice_from_text(lat.to_text())
    assert np.array_equal(back.points, lat.points) and np.array_equal(back.indices, lat.indices)
    assert (back.bound_c, back.rate_r, back.m, back.scheme, back.seed) == \
        (lat.bound_c, lat.rate_r, lat.m, lat.scheme, lat.seed)


def test_text_rejects_other_formats():
    with pytest.raises(ValueError):
        lattice_from_text("lattice v2 M=1\n0 0.1\n")


def _with_point(lat, n, value):
    pts = lat.points.copy()
    pts[lat.indices == n] = value
    return PerturbedLattice(lat.indices, pts, lat.bound_c, lat.rate_r, lat.m)


def test_validate_detects_violations():
    lat = make_lattice(6)
    assert validate_lattice(lat)
    zero = validate_lattice(_with_point(lat, 0, 0.0))
    assert not zero and zero.first_bad_index == 0
    big = validate_lattice(_with_point(lat, 5, 6.0))
    assert not big and big.first_bad_index == 5
    assert not validate_lattice(integer_lattice(3))
    bad_idx = PerturbedLattice(np.arange(0, 3), np.arange(3) + 0.1, 0.5, 0.5, 1)
    assert not validate_lattice(bad_idx)


def test_decay_fit_exact():
    n = np.arange(-5, 6)
    fit = decay_fit(list(zip(n, 2 * 0.5 ** np.abs(n))))
    assert fit.c_hat == pytest.approx(2.0, abs=1e-12)
    assert fit.r_hat == pytest.approx(0.5, abs=1e-12)


def test_decay_fit_noisy(rng):
    n = np.arange(-10, 11)
    v = 0.5 ** np.abs(n) * (1 + 0.01 * rng.standard_normal(n.size))
    assert 0.49 < decay_fit(n, v).r_hat < 0.51


def test_decay_fit_degenerate():
    n = np.arange(-5, 6)
    with pytest.raises(DegenerateDataError):
        decay_fit(n, np.zeros(n.size))
    with pytest.raises(DegenerateDataError):
        decay_fit([1, 2, 3], [0.5, 0.25, 0.125])
    with pytest.raises(DegenerateDataError):
        decay_fit(n, np.where(np.abs(n) < 5, 1e-320, 1.0))


@given(st.floats(1e-6, 1e6), st.floats(0.05, 0.95))
def test_decay_fit_scale_equivariant(s, r):
    n = np.arange(-6, 7)
    v = 0.3 * r ** np.abs(n) * (1 + 0.1 * np.cos(n))
    a, b = decay_fit(n, v), decay_fit(n, s * v)
    assert b.c_hat == pytest.approx(s * a.c_hat, rel=1e-10)
    assert b.r_hat == pytest.approx(a.r_hat, abs=1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_mean_value_gap_all_schemes(gp, scheme):
    for m in (5, 24, 40):
        rep = mean_value_gap_check(gp, make_lattice(m, scheme, 0.5, 0.5, seed=7))
        assert rep.passed
    assert rep.fit is not None and rep.fit.r_hat <= 0.55


def test_mean_value_gap_zero_bound_fails(gp, lattice24):
    assert not mean_value_gap_check(gp, lattice24, deriv_bound=0.0).passed


def test_rolle_cubic_oracle():
    lat = truncate_lattice(make_lattice(1, "alternating", 0.5, 0.5), 0)  # single point 0.25
    assert lat.points[0] == 0.25

    def f(x):
        return x * (x - 0.25) * (x - 1.0)

    def df(x):
        return 3 * x * x - 2.5 * x + 0.25

    exact = (2.5 - math.sqrt(2.5**2 - 3.0)) / 6
    res = rolle_points(f, lat)
    assert res.points[0] == pytest.approx(exact, abs=1e-10)
    assert rolle_points(f, lat, df=df).points[0] == pytest.approx(exact, abs=1e-10)
    assert validate_lattice(res.lattice)


@given(st.integers(1, 3), st.sampled_from(SCHEMES), st.integers(0, 1000))
def test_rolle_points_form_a_lattice(m, scheme, seed):
    lat = make_lattice(m, scheme, 0.5, 0.5, seed)
    roots = np.concatenate([lat.indices.astype(float), lat.points])

    def f(x):
        return np.prod(x - roots)

    res = rolle_points(f, lat)
    assert not res.failures
    child = res.lattice
    assert validate_lattice(child)
    lo = np.minimum(lat.indices, lat.points)
    hi = np.maximum(lat.indices, lat.points)
    assert np.all((child.points > lo) & (child.points < hi))


def test_rolle_rejects_integer_lattice():
    with pytest.raises(ValueError):
        rolle_points(lambda x: math.sin(math.pi * x) ** 2, integer_lattice(2))


def test_rolle_records_failures():
    lat = make_lattice(1)
    res = rolle_points(lambda x: 1.0, lat, df=lambda x: 1.0)
    assert res.lattice is None and set(res.failures) == {-1, 0, 1}


def test_truncate_bounds(lattice24):
    with pytest.raises(ValueError):
        truncate_lattice(lattice24, 25)
    assert len(truncate_lattice(lattice24, 0)) == 1
