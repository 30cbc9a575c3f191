"""
Approximating by translates
===========================

Best approximation of a few targets by ``sum c_lambda phi(t - lambda)`` over
nested families ``|n| <= M``.  Residuals can only go down with ``M``; how
fast they go down is not something a finite run can settle.
"""

from deepzero import GeneratorPair, annihilator_probe, completeness_curve, integer_lattice_contrast, make_lattice
from deepzero.approx import SHIPPED_TARGETS
from deepzero.lattice import truncate_lattice

gp = GeneratorPair()
lat = make_lattice(24, "alternating", 0.5, 0.5)
for target in SHIPPED_TARGETS:
    for p in (1.5, 2.0):
        curve = completeness_curve(gp, lat, (4, 8, 16, 24), p, target)
        print(f"{target:20s} p={p}: " + "  ".join(f"{c.residual:.4f}" for c in curve))

out = integer_lattice_contrast(gp, "odd_half", 2.0, 8)
print(f"\nodd target, M = 8: Z residual {out['integer']:.4f}, perturbed residual {out['perturbed']:.4f}")

# the dual side: how small can (phi * h) be on the lattice for a unit-norm h?
for m, dim in ((0, 50), (6, 3), (20, 10)):
    res = annihilator_probe(gp, truncate_lattice(make_lattice(max(m, 1)), m), 2.0, dim, iterations=1500)
    print(f"M = {m:2d}, h on {dim} points: min sup |phi * h| = {res.minimum:.3e}")
