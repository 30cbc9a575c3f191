"""
A generator with deep zeros
===========================

The time-side generator is ``Phi(t) = exp(-a t^2 - b / sin^2(pi t))``.  It is
flat at every integer and Gaussian at infinity, which is what the envelope
``c1 exp(-c2 (|t| + 1/d(t, Z)))`` measures.
"""

import numpy as np

from deepzero import GeneratorSpec, dist_to_integers, fit_envelope, verify_deep_zero

spec = GeneratorSpec(gaussian_rate=1.0, flatness_rate=1.0)

# a few values; at t = 0.5 only the Gaussian and the constant e^{-1} remain
for t in (0.5, 0.25, 0.1, 0.01, 3.0):
    print(f"Phi({t:5}) = {spec.value(t):.6e}   d(t, Z) = {dist_to_integers(t)}")

# fit the tightest envelope over the first three derivatives and check it
grid = np.linspace(-8, 8, 2000)
profile = fit_envelope(spec, grid, derivative_order=2)
report = verify_deep_zero(spec, profile, grid, derivative_order=2)
print(f"\nfitted c1 = {profile.c1:.4g}, c2 = {profile.c2:.4f}")
print("max |Phi^(j)| / envelope:", {j: round(r, 4) for j, r in report.max_ratio.items()})

# with a cap on c1 the admissible rate is smaller
capped = fit_envelope(spec, grid, derivative_order=2, c1_max=100.0)
print(f"with c1 <= 100: c2 = {capped.c2:.4f}")
