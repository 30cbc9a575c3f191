"""
Mollifier pairs and pairing decay
=================================

``h_eps`` is a sinc power, ``H_eps`` the matching B-spline kernel.  Pairing
the mollified generator against shifted flat bumps gives numbers that decay
exponentially in the shift.
"""

import numpy as np

from deepzero import (BumpTestFunction, GeneratorPair, H_mass, KHatElement, MollifierPair, d_sweep,
                      duality_check, pairing_decay_experiment, smoothing_inequality_check)

for order in (2, 4, 6):
    mp = MollifierPair(0.02, order)
    print(f"N = {order}: mass - 1 = {H_mass(mp) - 1: .1e}, duality gap {duality_check(mp, np.linspace(-10, 10, 801)):.1e}")

mp, bump = MollifierPair(0.02, 4), BumpTestFunction(0.3)
for k in (0, 1, 2):
    r = smoothing_inequality_check(mp, bump, k)
    print(f"k = {k}: sup|(Psi * H)^(k)| = {r.lhs:.4g} <= {r.rhs:.4g}")

gp = GeneratorPair()
exp = pairing_decay_experiment(KHatElement(((0, gp),)), mp, bump)
print("\n n   |pairing|   fitted")
for n, v, e in exp.rows():
    if n >= 0:
        print(f"{n:2d}  {v:.3e}  {e:.3e}")
print(f"rate {exp.rate:.3f}")

sweep = d_sweep(KHatElement(((0, gp),)), mp)
print(f"d-sweep: log|sum| = {sweep.intercept:.3f} + ({sweep.slope:.3f}) / d")
