"""
Perturbed lattices and the mean-value gap
=========================================

``Lambda = {n + a_n}`` with ``0 < |a_n| < C r^|n|``.  Because ``phi`` is
Lipschitz, ``|phi(n) - phi(lambda_n)|`` inherits the geometric decay of the
perturbations.
"""

import numpy as np

from deepzero import GeneratorPair, decay_fit, make_lattice, mean_value_gap_check, rolle_points

gp = GeneratorPair()
for scheme in ("alternating", "constant", "random"):
    lat = make_lattice(24, scheme, c=0.5, r=0.5, seed=3)
    fit = decay_fit(lat.indices, lat.perturbations)
    rep = mean_value_gap_check(gp, lat)
    print(f"{scheme:11s}: r_hat(a_n) = {fit.r_hat:.3f}, gap/bound max = {np.max(rep.gaps / rep.bounds):.3f}, "
          f"r_hat(gaps) = {rep.fit.r_hat:.3f}")

# Rolle: a function vanishing on Z and on Lambda has a critical point between n and lambda_n
lat = make_lattice(2)
roots = np.concatenate([lat.indices.astype(float), lat.points])
res = rolle_points(lambda x: np.prod(x - roots), lat)
print("\nRolle lattice:", np.round(res.lattice.points, 6))
print(lat.to_text())
