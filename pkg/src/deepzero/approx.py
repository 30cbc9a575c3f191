"""Best approximation by finite families of translates ``phi(t - lambda)``.

``L^p`` is discretized as a weighted ``l^p`` norm on a uniform grid with
Riemann weight ``dt``:  ``||r|| = (sum_i w_i |r_i|^p dt)^(1/p)``.  ``p = 2`` is
a ridge-regularized least-squares problem; other ``p`` use iteratively
reweighted least squares (IRLS) with a backtracking safeguard, so the
residual norm never increases from one iteration to the next.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import BandExceededError
from .lattice import PerturbedLattice, integer_lattice, make_lattice, truncate_lattice

GRID_MARGIN = 3.0
DEFAULT_EXTENT = 12.0
DEFAULT_STEP = 0.05


# --- targets --------------------------------------------------------------


def _gaussian(t):
    return np.exp(-((t - 0.37) ** 2))


def _gaussian_difference(t):
    return np.exp(-((t - 1.2) ** 2)) - np.exp(-((t + 0.8) ** 2) / 0.5)


def _smoothed_indicator(t):
    return 0.5 * (np.tanh((t + 2.0) / 0.3) - np.tanh((t - 2.0) / 0.3)) * np.exp(-((t / 6.0) ** 2))


def _modulated_gaussian(t):
    return np.exp(-(t**2) / 4.0) * np.cos(3.0 * t + 0.2 * t**2)


def _odd_half(t):
    u = t - 0.5
    return u * np.exp(-(u**2))


TARGETS = {
    "gaussian": _gaussian,
    "gaussian_difference": _gaussian_difference,
    "smoothed_indicator": _smoothed_indicator,
    "modulated_gaussian": _modulated_gaussian,
    "odd_half": _odd_half,
}
SHIPPED_TARGETS = ("gaussian", "gaussian_difference", "smoothed_indicator", "modulated_gaussian")


def make_target(name, grid, generator=None, lattice=None):
    """Target values on ``grid``.

    Besides the entries of ``TARGETS``: ``"in_span"`` is ``phi(t - lambda_0)``
    for the lattice point with index 0, and ``"zero"`` is identically 0.
    """
    grid = np.asarray(grid, dtype=float)
    if name == "zero":
        return np.zeros_like(grid)
    if name == "in_span":
        if generator is None or lattice is None:
            raise ValueError("in_span target needs a generator and a lattice")
        lam0 = float(lattice.points[lattice.indices == 0][0])
        return generator.fourier_grid(grid - lam0)
    try:
        return TARGETS[name](grid)
    except KeyError:
        raise ValueError(f"unknown target {name!r}") from None


def weight_inverse_square(grid):
    """Default weight ``1 / (1 + t^2)`` for the weighted ``L^1`` mode."""
    return 1.0 / (1.0 + np.asarray(grid, dtype=float) ** 2)


def uniform_grid(extent=DEFAULT_EXTENT, step=DEFAULT_STEP):
    n = int(round(extent / step))
    return np.arange(-n, n + 1) * step


# --- problem / result -----------------------------------------------------


@dataclass
class ApproxProblem:
    generator: object
    lattice: PerturbedLattice
    grid: np.ndarray
    p: float
    target: np.ndarray
    weight: np.ndarray | None = None
    tau_rel: float = 1e-10
    delta_rel: float = 1e-8
    tol: float = 1e-8
    max_iter: int = 200
    allow_unweighted_l1: bool = False
    _matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.target = np.asarray(self.target, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ValueError("grid must be a 1-d array with at least two points")
        steps = np.diff(self.grid)
        if not np.all(steps > 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise ValueError("grid must be uniform and increasing")
        if self.target.shape != self.grid.shape:
            raise ValueError("target must have one value per grid point")
        if self.weight is not None:
            self.weight = np.asarray(self.weight, dtype=float)
            if self.weight.shape != self.grid.shape or not np.all(self.weight > 0):
                raise ValueError("weights must be positive, one per grid point")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.p == 1 and self.weight is None and not self.allow_unweighted_l1:
            raise ValueError("p = 1 needs a weight vanishing at infinity (unweighted L^1 is not supported)")
        lo, hi = float(np.min(self.lattice.points)), float(np.max(self.lattice.points))
        if self.grid[0] > lo - GRID_MARGIN or self.grid[-1] < hi + GRID_MARGIN:
            raise ValueError(f"grid [{self.grid[0]}, {self.grid[-1]}] must cover the lattice with margin {GRID_MARGIN}")

    @property
    def step(self):
        return float(self.grid[1] - self.grid[0])

    @property
    def weights(self):
        return np.ones_like(self.grid) if self.weight is None else self.weight

    def norm(self, r):
        """Discrete ``(sum w |r|^p dt)^(1/p)``."""
        return float(np.sum(self.weights * np.abs(r) ** self.p) * self.step) ** (1.0 / self.p)


def make_problem(generator, lattice, p=1.5, target="gaussian", extent=None, step=DEFAULT_STEP,
                 weight=None, **settings):
    """Problem on a grid ``[-T, T]`` with ``T = max(12, max|lambda| + 3)`` unless given."""
    if extent is None:
        extent = max(DEFAULT_EXTENT, math.ceil(float(np.max(np.abs(lattice.points)))) + GRID_MARGIN)
    grid = uniform_grid(extent, step)
    values = make_target(target, grid, generator, lattice) if isinstance(target, str) else target
    if isinstance(weight, str):
        if weight != "inverse_square":
            raise ValueError(f"unknown weight {weight!r}")
        weight = weight_inverse_square(grid)
    return ApproxProblem(generator, lattice, grid, p, values, weight, **settings)


@dataclass
class ApproxResult:
    coefficients: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    history: list
    tau: float
    delta: float
    condition_estimate: float
    tau_retries: int = 0

    def __post_init__(self):
        if not self.residual_norm >= 0:
            raise ValueError("residual norm must be nonnegative")


# --- design matrix and solver --------------------------------------------


@lru_cache(maxsize=8)
def _translate_matrix(generator, grid_bytes, point_bytes):
    # keyed on raw bytes so curves for several p and targets share one matrix
    grid = np.frombuffer(grid_bytes)
    points = np.frombuffer(point_bytes)
    diffs = np.subtract.outer(grid, points)
    if np.max(np.abs(diffs)) > generator.band:
        raise BandExceededError("grid-lattice offsets exceed the generator band; rebuild the generator")
    out = generator.fourier_grid(diffs)
    out.setflags(write=False)
    return out


def design_matrix(problem):
    """Entries ``phi(t_i - lambda_j)``; cached on the problem and across problems."""
    if problem._matrix is None:
        grid = np.ascontiguousarray(problem.grid, dtype=float)
        points = np.ascontiguousarray(problem.lattice.points, dtype=float)
        problem._matrix = _translate_matrix(problem.generator, grid.tobytes(), points.tobytes())
    return problem._matrix


def ridge_solve(A, b, tau):
    """``argmin ||A c - b||^2 + tau ||c||^2`` via an augmented least-squares system."""
    n = A.shape[1]
    aug = np.vstack([A, math.sqrt(tau) * np.eye(n)])
    rhs = np.concatenate([b, np.zeros(n)])
    c, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    return c


def _safe_ridge(A, b, tau):
    retries = 0
    while True:
        try:
            c = ridge_solve(A, b, tau)
            if np.all(np.isfinite(c)):
                return c, tau, retries
        except np.linalg.LinAlgError:
            pass
        retries += 1
        if retries > 8:
            raise np.linalg.LinAlgError("ridge system stayed singular after 8 retries")
        tau = max(tau * 100, 1e-300)


def solve_best_approx(problem, initial=None, matrix=None):
    """Minimize the discrete weighted ``l^p`` residual over translate coefficients.

    Each iteration solves a ridge-regularized weighted least-squares problem
    with IRLS weights ``w_i (r_i^2 + delta^2)^((p-2)/2)`` (constant for
    ``p = 2``) and ridge ``tau = tau_rel * ||W^(1/2) A||_F^2``.  The step
    towards that solution is halved until the residual norm does not
    increase, which makes the norm history monotone for every ``p``.
    Iteration stops when the relative decrease falls below ``tol`` or after
    ``max_iter`` iterations (``converged = False``).
    """
    A = design_matrix(problem) if matrix is None else matrix
    g = problem.target
    p = problem.p
    w = problem.weights * problem.step
    sw = np.sqrt(w)
    cond = float(np.linalg.cond(sw[:, None] * A))
    gmax = float(np.max(np.abs(g)))
    delta = problem.delta_rel * gmax
    ncol = A.shape[1]
    c = np.zeros(ncol) if initial is None else np.asarray(initial, dtype=float).copy()
    if gmax == 0 and initial is None:
        return ApproxResult(c, 0.0, 0, True, [0.0], 0.0, 0.0, cond)

    r = problem.norm(A @ c - g)
    history = [r]
    tau_used, retries = 0.0, 0
    converged = False
    it = 0
    while it < problem.max_iter:
        it += 1
        res = A @ c - g
        if p == 2:
            irls = w
        else:
            irls = w * (res * res + delta * delta) ** ((p - 2) / 2)
        s = np.sqrt(irls)
        As = s[:, None] * A
        tau = problem.tau_rel * float(np.sum(As * As))
        cand, tau_used, k = _safe_ridge(As, s * g, tau)
        retries += k
        direction = cand - c
        step, r_new, c_new = 1.0, r, c
        for _ in range(40):
            trial = c + step * direction
            r_trial = problem.norm(A @ trial - g)
            if r_trial <= r:
                r_new, c_new = r_trial, trial
                break
            step *= 0.5
        if c_new is c:
            converged = True
            break
        decrease = (r - r_new) / r if r > 0 else 0.0
        c, r = c_new, r_new
        history.append(r)
        if r == 0 or decrease < problem.tol:
            converged = True
            break
    return ApproxResult(c, r, it, converged, history, tau_used, delta, cond, retries)


# --- experiments ----------------------------------------------------------


@dataclass
class CurvePoint:
    m: int
    p: float
    residual: float
    iterations: int
    condition_estimate: float
    tau: float
    delta: float
    converged: bool
    history: list = field(default_factory=list, repr=False)

    def row(self):
        return (self.m, self.p, self.residual, self.iterations, self.condition_estimate, self.tau, self.delta)


CURVE_HEADER = ("M", "p", "residual", "iterations", "condition_estimate", "tau", "delta")


def completeness_curve(generator, lattice, m_list, p=1.5, target="gaussian", step=DEFAULT_STEP,
                       weight=None, extent=None, **settings):
    """Best-approximation residuals for the nested families ``|n| <= M``.

    All ``M`` share one grid (sized for the largest lattice) and one design
    matrix.  Each solve starts from the previous ``M``'s coefficients padded
    with zeros; since the solver never increases the residual from its
    starting point, the curve is nonincreasing.
    """
    m_list = [int(m) for m in m_list]
    if m_list != sorted(m_list):
        raise ValueError("m_list must be ascending")
    full = make_problem(generator, lattice, p, target, extent=extent, step=step, weight=weight, **settings)
    A_full = design_matrix(full)
    out = []
    prev_idx, prev_c = None, None
    for m in m_list:
        cols = np.abs(lattice.indices) <= m
        sub = ApproxProblem(generator, truncate_lattice(lattice, m), full.grid, p, full.target, full.weight,
                            **settings)
        A = A_full[:, cols]
        init = None
        if prev_c is not None:
            init = np.zeros(int(cols.sum()))
            idx = lattice.indices[cols]
            init[np.isin(idx, prev_idx)] = prev_c
        res = solve_best_approx(sub, initial=init, matrix=A)
        out.append(CurvePoint(m, p, res.residual_norm, res.iterations, res.condition_estimate, res.tau,
                              res.delta, res.converged, res.history))
        prev_idx, prev_c = lattice.indices[cols], res.coefficients
    return out


def integer_lattice_contrast(generator, target="odd_half", p=2.0, m=8, scheme="alternating", c=0.5, r=0.5,
                             seed=0, step=DEFAULT_STEP, **settings):
    """Residuals for ``Z`` and for a perturbed lattice at equal ``M`` and settings (report only)."""
    if p != 2:
        raise ValueError("the integer-lattice contrast is defined for p = 2")
    pert = truncate_lattice(make_lattice(max(m, 1), scheme, c, r, seed), m)
    ints = integer_lattice(m)
    extent = max(DEFAULT_EXTENT, m + 1 + GRID_MARGIN)
    results = {}
    for name, lat in (("integer", ints), ("perturbed", pert)):
        prob = make_problem(generator, lat, p, target, extent=extent, step=step, **settings)
        results[name] = solve_best_approx(prob).residual_norm
    return results


CONTRAST_HEADER = ("M", "p", "residual_integer", "residual_perturbed")


# --- annihilator probe ----------------------------------------------------


def trapezoid_weights(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.size == 1:
        return np.ones(1)
    dx = grid[1] - grid[0]
    w = np.full(grid.size, dx)
    w[0] = w[-1] = dx / 2
    return w


def convolve_on_lattice(generator, h_values, h_grid, points):
    """``(phi * h)(lambda) = int phi(lambda - x) h(x) dx`` by the trapezoid rule on ``h_grid``.

    A single interior spike ``h = 1/dx`` at ``x = 0`` returns ``phi(lambda)``.
    """
    return convolution_matrix(generator, h_grid, points) @ np.asarray(h_values, dtype=float)


def convolution_matrix(generator, h_grid, points):
    h_grid = np.asarray(h_grid, dtype=float)
    diffs = np.subtract.outer(np.asarray(points, dtype=float), h_grid)
    return generator.fourier_grid(diffs) * trapezoid_weights(h_grid)


def _lq_normalize(h, q):
    return h / np.sum(np.abs(h) ** q) ** (1.0 / q)


def minimize_sup_on_sphere(B, q, iterations=3000, starts=24, seed=0, step0=0.5, step_final=1e-7):
    """Approximate ``min ||B h||_inf`` over the unit ``l^q`` sphere.

    Projected subgradient descent with normalized steps decaying
    geometrically from ``step0`` to ``step_final``, run from ``starts``
    seeded random directions (plus coordinate vectors); the best value seen
    is returned as ``(value, h, converged)``.  ``converged`` means the last
    quarter of the best run improved the value by less than 1e-6 relative.
    """
    B = np.asarray(B, dtype=float)
    dim = B.shape[1]
    rng = np.random.default_rng(seed)
    inits = [np.eye(dim)[i] for i in range(min(dim, starts))]
    inits += [rng.standard_normal(dim) for _ in range(starts)]
    decay = (step_final / step0) ** (1.0 / max(iterations - 1, 1))
    best_val, best_h, best_trace = math.inf, None, None
    for h0 in inits:
        h = _lq_normalize(h0, q)
        val = float(np.max(np.abs(B @ h)))
        run_best, run_h, trace = val, h, [val]
        step = step0
        for _ in range(iterations):
            v = B @ h
            k = int(np.argmax(np.abs(v)))
            sub = np.sign(v[k]) * B[k]
            nrm = np.linalg.norm(sub)
            if nrm == 0:
                break
            h = _lq_normalize(h - step * sub / nrm, q)
            val = float(np.max(np.abs(B @ h)))
            if val < run_best:
                run_best, run_h = val, h
            trace.append(run_best)
            step *= decay
        if run_best < best_val:
            best_val, best_h, best_trace = run_best, run_h, trace
    quarter = best_trace[-max(len(best_trace) // 4, 1)]
    converged = quarter - best_val <= 1e-6 * max(quarter, 1e-300)
    return best_val, best_h, bool(converged)


@dataclass
class AnnihilatorResult:
    minimum: float
    h: np.ndarray
    h_grid: np.ndarray
    q: float
    converged: bool


ANNIHILATOR_HEADER = ("M", "q", "h_dim", "minimum", "converged")


def annihilator_probe(generator, lattice, q, h_dim, h_extent=None, **search):
    """Smallest ``max_lambda |(phi * h)(lambda)|`` found over discrete ``h`` with ``||h||_q = 1``.

    ``h`` lives on ``h_dim`` equispaced points of ``[-L, L]`` with
    ``L = max|lambda| + 1`` by default.  A value near zero means an (almost)
    annihilating ``h`` exists at this resolution.
    """
    if not (q >= 1 and math.isfinite(q)):
        raise ValueError("q must be finite and >= 1")
    if h_extent is None:
        h_extent = float(np.max(np.abs(lattice.points))) + 1.0
    h_grid = np.linspace(-h_extent, h_extent, h_dim) if h_dim > 1 else np.zeros(1)
    B = convolution_matrix(generator, h_grid, lattice.points)
    val, h, conv = minimize_sup_on_sphere(B, q, **search)
    return AnnihilatorResult(val, h, h_grid, q, conv)
