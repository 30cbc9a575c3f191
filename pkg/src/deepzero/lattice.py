"""Finite truncations of perturbed integer lattices ``{n + a_n : |n| <= M}``.

The perturbations are nonzero and exponentially small, ``|a_n| < C r^|n|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import DegenerateDataError

SCHEMES = ("alternating", "random", "constant")
UNDERFLOW_FLOOR = 1e-300
ROLLE_XTOL = 1e-12


@dataclass(frozen=True)
class PerturbedLattice:
    indices: np.ndarray
    points: np.ndarray
    bound_c: float
    rate_r: float
    m: int
    scheme: str = "custom"
    seed: int = 0

    @property
    def perturbations(self):
        return self.points - self.indices

    def __len__(self):
        return int(self.indices.size)

    def to_text(self):
        """Versioned text record; see :func:`lattice_from_text`."""
        lines = [
            f"lattice v1 M={self.m} C={self.bound_c:.17g} r={self.rate_r:.17g} "
            f"scheme={self.scheme} seed={self.seed}"
        ]
        lines += [f"{int(n)} {lam:.17g}" for n, lam in zip(self.indices, self.points)]
        return "\n".join(lines) + "\n"


def lattice_from_text(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[:2] != ["lattice", "v1"]:
        raise ValueError(f"not a v1 lattice record: {lines[0]!r}")
    meta = dict(item.split("=", 1) for item in head[2:])
    rows = [ln.split() for ln in lines[1:]]
    return PerturbedLattice(
        indices=np.array([int(n) for n, _ in rows]),
        points=np.array([float(v) for _, v in rows]),
        bound_c=float(meta["C"]),
        rate_r=float(meta["r"]),
        m=int(meta["M"]),
        scheme=meta["scheme"],
        seed=int(meta["seed"]),
    )


def _index_code(n):
    # non-negative key per index so each a_n has its own stream (nested lattices agree)
    return 2 * abs(n) + (1 if n < 0 else 0)


def make_lattice(m, scheme="alternating", c=0.5, r=0.5, seed=0):
    """Build ``{n + a_n : |n| <= m}``.

    alternating: ``a_n = (-1)^n (c/2) r^|n|``; constant: ``a_n = (c/2) r^|n|``;
    random: ``|a_n|`` uniform in ``[c r^|n|/4, c r^|n|/2]`` with a random sign.
    Random draws are keyed on ``(seed, n)``, so the lattice for ``m`` is a
    sub-lattice of the one for any larger ``m``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 < r < 1:
        raise ValueError(f"rate r must lie in (0, 1), got {r}")
    if not c > 0:
        raise ValueError("bound c must be positive")
    if c >= 1:
        raise ValueError(f"c = {c} risks collisions: |a_n| <= c/2 must stay below 1/2")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    n = np.arange(-m, m + 1)
    scale = c * r ** np.abs(n)
    # the smallest |a_n| (random floor c r^M / 4) must survive the addition n + a_n
    if c * r**m / 4 <= 4 * np.spacing(float(m)):
        raise ValueError(f"c r^M = {c * r**m:.3g} is below double resolution at |n| = {m}; lower M or raise r")
    if scheme == "alternating":
        a = np.where(n % 2 == 0, 1.0, -1.0) * scale / 2
    elif scheme == "constant":
        a = scale / 2
    else:
        a = np.empty(n.size)
        for i, k in enumerate(n):
            rng = np.random.default_rng([seed, _index_code(int(k))])
            mag = rng.uniform(0.25, 0.5)
            sign = 1.0 if rng.integers(2) else -1.0
            a[i] = sign * mag * scale[i]
    lat = PerturbedLattice(n, n + a, float(c), float(r), int(m), scheme, int(seed))
    check = validate_lattice(lat)
    if not check:
        raise ValueError(f"generated lattice violates invariants: {check.reason}")
    return lat


@dataclass
class LatticeCheck:
    ok: bool
    first_bad_index: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_lattice(lat):
    """Truthy report: nonzero, bounded perturbations; indices ``-M..M``; increasing points."""
    n, lam = np.asarray(lat.indices), np.asarray(lat.points, dtype=float)
    if n.shape != lam.shape or not np.array_equal(n, np.arange(-lat.m, lat.m + 1)):
        return LatticeCheck(False, None, "indices are not exactly -M..M")
    if not np.all(np.isfinite(lam)):
        bad = int(n[~np.isfinite(lam)][0])
        return LatticeCheck(False, bad, "non-finite point")
    if not (lat.bound_c > 0 and 0 < lat.rate_r < 1):
        return LatticeCheck(False, None, "bound constants out of range")
    a = lam - n
    bound = lat.bound_c * lat.rate_r ** np.abs(n)
    for k, ak, bk in zip(n, a, bound):
        if ak == 0:
            return LatticeCheck(False, int(k), "a_n == 0")
        if not abs(ak) < bk:
            return LatticeCheck(False, int(k), f"|a_n| = {abs(ak):.3g} >= C r^|n| = {bk:.3g}")
    steps = np.diff(lam)
    if np.any(steps <= 0):
        bad = int(n[1:][steps <= 0][0])
        return LatticeCheck(False, bad, "points not strictly increasing")
    return LatticeCheck(True)


@dataclass(frozen=True)
class DecayFit:
    c_hat: float
    r_hat: float
    max_residual: float


def decay_fit(samples, values=None):
    """Least-squares fit of ``log|v| = log c + |n| log r``.

    ``samples`` is either a sequence of ``(n, v)`` pairs or an index array with
    ``values`` given separately.  Values below 1e-300 are dropped.
    """
    if values is None:
        pairs = np.asarray(samples, dtype=float).reshape(-1, 2)
        n, v = pairs[:, 0], pairs[:, 1]
    else:
        n, v = np.asarray(samples, dtype=float), np.asarray(values, dtype=float)
    keep = np.abs(v) >= UNDERFLOW_FLOOR
    n, v = np.abs(n[keep]), np.abs(v[keep])
    if n.size < 4 or np.unique(n).size < 2:
        raise DegenerateDataError(f"decay_fit needs >= 4 usable samples over >= 2 distinct |n|; got {n.size}")
    design = np.column_stack([np.ones_like(n), n])
    coef, *_ = np.linalg.lstsq(design, np.log(v), rcond=None)
    resid = np.log(v) - design @ coef
    return DecayFit(math.exp(coef[0]), math.exp(coef[1]), float(np.max(np.abs(resid))))


@dataclass
class MeanValueReport:
    indices: np.ndarray
    gaps: np.ndarray
    bounds: np.ndarray
    deriv_bound: float
    fit: DecayFit | None = None

    @property
    def passed(self):
        return bool(np.all(self.gaps <= self.bounds))

    def to_dict(self):
        out = {"deriv_bound": self.deriv_bound, "max_gap_ratio": float(np.max(self.gaps / self.bounds)),
               "passed": self.passed}
        if self.fit is not None:
            out.update(gap_c_hat=self.fit.c_hat, gap_r_hat=self.fit.r_hat, gap_max_residual=self.fit.max_residual)
        return out


def mean_value_gap_check(gp, lat, deriv_bound=None):
    """Verify ``|phi(n) - phi(lambda_n)| <= sup|phi'| * |a_n|`` over the lattice.

    The default bound is ``gp.derivative_sup_bound()``.  A decay fit of the
    gaps above the quadrature rounding floor is attached when at least four
    of them are resolvable.
    """
    if deriv_bound is None:
        deriv_bound = gp.derivative_sup_bound()
    n = lat.indices.astype(float)
    gaps = np.abs(gp.fourier_grid(n) - gp.fourier_grid(lat.points))
    bounds = deriv_bound * np.abs(lat.perturbations)
    # differences below the rounding level of the quadrature sums carry no signal
    floor = 64 * np.finfo(float).eps * gp.fourier_eval(0.0)
    resolved = gaps > floor
    try:
        fit = decay_fit(n[resolved], gaps[resolved])
    except DegenerateDataError:
        fit = None
    return MeanValueReport(lat.indices, gaps, bounds, float(deriv_bound), fit)


@dataclass
class RolleResult:
    lattice: PerturbedLattice | None
    points: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)


def _numeric_derivative(f, width):
    h = max(width * 1e-3, 1e-14)

    def df(x):
        # five-point stencil, exact for quartics
        return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)

    return df


def rolle_points(f, lat, df=None, xtol=ROLLE_XTOL):
    """Critical points of ``f`` strictly between ``n`` and ``lambda_n``.

    ``f`` must vanish on both the integers and the lattice.  ``df`` defaults
    to a five-point difference scaled to each interval.  Intervals where ``df``
    has no sign change are recorded in ``failures``; the returned lattice is
    only built (and validated against the parent's ``C, r``) when every index
    succeeds.
    """
    check = validate_lattice(lat)
    if not check:
        raise ValueError(f"parent lattice invalid: {check.reason}")
    result = RolleResult(None)
    for n, lam in zip(lat.indices, lat.points):
        lo, hi = sorted((float(n), float(lam)))
        g = df if df is not None else _numeric_derivative(f, hi - lo)
        glo, ghi = g(lo), g(hi)
        if not glo * ghi < 0:
            result.failures[int(n)] = "no sign change of f' on the interval"
            continue
        x = bisect(g, lo, hi, xtol=xtol)
        if not lo < x < hi:
            result.failures[int(n)] = "critical point collapsed onto an endpoint"
            continue
        result.points[int(n)] = x
    if not result.failures:
        pts = np.array([result.points[int(n)] for n in lat.indices])
        child = PerturbedLattice(lat.indices.copy(), pts, lat.bound_c, lat.rate_r, lat.m, "rolle", lat.seed)
        check = validate_lattice(child)
        if not check:
            raise RuntimeError(f"Rolle lattice violates invariants: {check.reason}")
        result.lattice = child
    return result


def truncate_lattice(lat, m):
    """Sub-lattice ``|n| <= m`` (``m = 0`` keeps the single point ``lambda_0``)."""
    if m < 0 or m > lat.m:
        raise ValueError(f"cannot truncate an M={lat.m} lattice to m={m}")
    keep = np.abs(lat.indices) <= m
    return PerturbedLattice(lat.indices[keep], lat.points[keep], lat.bound_c, lat.rate_r, int(m),
                            lat.scheme, lat.seed)


def integer_lattice(m):
    """The unperturbed ``{-m, ..., m}``; not a valid perturbed lattice, used for contrast runs."""
    n = np.arange(-m, m + 1)
    return PerturbedLattice(n, n.astype(float), 1.0, 0.5, int(m), "integer", 0)
