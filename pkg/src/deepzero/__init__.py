"""Translates of a deep-zero generator along perturbed integer lattices: numerics and checks."""
from .approx import (ApproxProblem, ApproxResult, annihilator_probe, completeness_curve, convolve_on_lattice,
                     design_matrix, integer_lattice_contrast, make_problem, solve_best_approx)
from .errors import BandExceededError, CheckFailed, DegenerateDataError, UnsupportedOrderError
from .generator import (DeepZeroProfile, GeneratorSpec, SyntheticEnvelope, dist_to_integers, eval_phi_derivative,
                        eval_phi_time, fit_envelope, verify_deep_zero)
from .lattice import (PerturbedLattice, decay_fit, lattice_from_text, make_lattice, mean_value_gap_check,
                      rolle_points, validate_lattice)
from .mollifier import (BumpTestFunction, KHatElement, MollifierPair, H_eps, H_mass, H_transform, d_sweep,
                        duality_check, h_eps, pairing, pairing_decay_experiment, periodized_pairing,
                        smoothing_inequality_check)
from .spectrum import (GeneratorPair, PeriodizationEvaluator, flat_zero_check, fourier_eval, fourier_grid,
                       gaussian_transform, periodize, poisson_discrepancy, strip_decay_check, theta_identity_gap)

__version__ = "0.1.0"
