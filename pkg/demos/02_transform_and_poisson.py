"""
The frequency-side generator and the Poisson identity
=====================================================

``phi`` is the Fourier transform of ``Phi`` by the trapezoid rule.  Its
integer samples are the Fourier coefficients of the periodization
``P(Phi)(t) = sum_k Phi(t + k)``, which vanishes to infinite order at 0.
"""

import numpy as np

from deepzero import GeneratorPair, GeneratorSpec, PeriodizationEvaluator, flat_zero_check, poisson_discrepancy
from deepzero.spectrum import poisson_tolerance, series_tail_estimate, strip_decay_check

gp = GeneratorPair()
print(f"phi(0) = {gp.fourier_eval(0.0):.15f}   band |x| <= {gp.band}")

# phi decays faster than any power but slower than exponentially
xs = np.array([1.0, 2.0, 5.0, 10.0, 20.0, 40.0])
for x, v in zip(xs, gp.fourier_grid(xs)):
    print(f"  phi({x:4.0f}) = {v: .3e}")
print("strip decay slope over 1..20:", round(strip_decay_check(gp, np.arange(1.0, 21.0)).slope, 2))

# Poisson: both sides independently, and how the error splits
pe = PeriodizationEvaluator(gp.spec, fold_count=8)
ts = np.arange(50) / 50
for n_max in (16, 32, 48, 64):
    disc = np.max(poisson_discrepancy(gp, pe, ts, n_max))
    print(f"n_max = {n_max:2d}: max discrepancy {disc:.2e}, dropped series tail {series_tail_estimate(gp, n_max):.2e}")
print(f"tolerance at n_max = 32 from the error budget: {poisson_tolerance(gp, pe, 32):.2e}")

# the pure Gaussian has no zeros at the integers, and the flat-zero check says so
for name, spec in (("deep-zero", gp.spec), ("gaussian", GeneratorSpec(1.0, 0.0))):
    rep = flat_zero_check(PeriodizationEvaluator(spec))
    print(f"{name:9s}: flat zero at 0 -> {rep.passed}, local orders {np.round(rep.local_orders, 1)}")
