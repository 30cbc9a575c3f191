"""Time-side generator with flat zeros at the integers and Gaussian decay.

The generator is

    Phi(t) = exp(-a t**2 - b / sin(pi t)**2),   Phi(n) = 0 for integer n,

which is real, even, positive off the integers and bounded by an envelope
``c1 * exp(-c2 * (|t| + 1/d(t, Z)))``.  The helpers here evaluate it, its
derivatives, and fit/verify such envelopes on sample grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateDataError, UnsupportedOrderError

SNAP = 1e-8
MAX_DERIVATIVE_ORDER = 6

# Finite-difference settings for orders >= 2: base step and stencil half-width.
# Central stencils with 2*_FD_HALF+1 nodes are accurate to O(h**(2*_FD_HALF+2-j)).
# Roundoff scales like eps * max|Phi| / h**j, so the base steps keep that term
# below ~1e-9 relative while truncation stays below ~1e-9 where d(t, Z) >= 0.05.
_C1_SLACK = 1e-12
_FD_HALF = 3
_FD_STEP = {2: 2e-3, 3: 4e-3, 4: 8e-3, 5: 1.2e-2, 6: 1.6e-2}


def dist_to_integers(t):
    """Distance from ``t`` to the nearest integer, in [0, 1/2].

    Accepts scalars or arrays.  Non-finite input raises ``ValueError``.
    """
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("dist_to_integers: input must be finite")
    d = np.abs(arr - np.round(arr))
    if d.ndim == 0:
        return float(d)
    return d


@dataclass(frozen=True)
class DeepZeroProfile:
    """Envelope constants ``c1 * exp(-c2 * (|t| + 1/d(t, Z)))``."""

    c1: float
    c2: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError(f"envelope constants must be positive, got c1={self.c1}, c2={self.c2}")

    def log_envelope(self, t):
        t = np.asarray(t, dtype=float)
        d = dist_to_integers(t)
        with np.errstate(divide="ignore"):
            s = np.abs(t) + 1.0 / d
        return math.log(self.c1) - self.c2 * s

    def envelope(self, t):
        return np.exp(self.log_envelope(t))


def _fd_weights(order, half):
    """Central finite-difference weights for ``order`` on nodes -half..half."""
    nodes = np.arange(-half, half + 1, dtype=float)
    vander = np.vander(nodes, increasing=True).T
    rhs = np.zeros(nodes.size)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


_FD_WEIGHTS = {j: _fd_weights(j, _FD_HALF) for j in _FD_STEP}


class _Smooth:
    """Shared derivative logic: closed form for j=1, finite differences above."""

    def value(self, t):
        raise NotImplementedError

    def first_derivative(self, t):
        raise NotImplementedError

    def derivative(self, t, j):
        """``j``-th derivative at ``t`` (scalar or array); ``j=0`` is the value.

        Orders >= 2 use a 7-point central stencil whose step shrinks near the
        integers so that the stencil never crosses the nearest zero.
        """
        if j == 0:
            return self.value(t)
        if j < 0 or j > MAX_DERIVATIVE_ORDER:
            raise UnsupportedOrderError(f"derivative order {j} not in 0..{MAX_DERIVATIVE_ORDER}")
        if j == 1:
            return self.first_derivative(t)
        t = np.asarray(t, dtype=float)
        d = dist_to_integers(t)
        h = np.minimum(_FD_STEP[j], np.asarray(d) / (_FD_HALF + 1))
        out = np.zeros(np.shape(t))
        mask = np.asarray(d) >= SNAP
        if np.any(mask):
            tm = t[mask] if t.ndim else t
            hm = h[mask] if t.ndim else h
            acc = 0.0
            for k, w in zip(range(-_FD_HALF, _FD_HALF + 1), _FD_WEIGHTS[j]):
                acc = acc + w * self.value(tm + k * hm)
            vals = acc / hm**j
            if t.ndim:
                out[mask] = vals
            else:
                return float(vals)
        return out if t.ndim else 0.0


@dataclass(frozen=True)
class GeneratorSpec(_Smooth):
    """Parameters of ``Phi(t) = exp(-a t^2 - b / sin^2(pi t))``.

    ``b = 0`` is allowed as a pure-Gaussian test mode (no integer zeros).
    """

    gaussian_rate: float = 1.0
    flatness_rate: float = 1.0

    def __post_init__(self):
        if not self.gaussian_rate > 0:
            raise ValueError("gaussian_rate must be positive")
        if not self.flatness_rate >= 0:
            raise ValueError("flatness_rate must be nonnegative")

    @property
    def gaussian_mode(self):
        return self.flatness_rate == 0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(t)):
            raise ValueError("generator evaluated at non-finite t")
        a, b = self.gaussian_rate, self.flatness_rate
        if b == 0:
            out = np.exp(-a * t * t)
            return float(out) if out.ndim == 0 else out
        d = dist_to_integers(t)
        mask = np.asarray(d) >= SNAP
        s2 = np.sin(np.pi * np.where(mask, t, 0.5)) ** 2
        out = np.where(mask, np.exp(-a * t * t - b / s2), 0.0)
        return float(out) if out.ndim == 0 else out

    def first_derivative(self, t):
        # Phi' = Phi * (-2 a t + 2 pi b cos(pi t) / sin^3(pi t))
        t = np.asarray(t, dtype=float)
        a, b = self.gaussian_rate, self.flatness_rate
        phi = np.asarray(self.value(t))
        if b == 0:
            out = phi * (-2 * a * t)
            return float(out) if out.ndim == 0 else out
        d = dist_to_integers(t)
        mask = np.asarray(d) >= SNAP
        tt = np.where(mask, t, 0.5)
        s = np.sin(np.pi * tt)
        logder = -2 * a * tt + 2 * np.pi * b * np.cos(np.pi * tt) / s**3
        out = np.where(mask, phi * logder, 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SyntheticEnvelope(_Smooth):
    """Test family ``c1 * exp(-c2 * (|t| + 1/d(t, Z)))``, exactly on the envelope."""

    c1: float
    c2: float

    def value(self, t):
        t = np.asarray(t, dtype=float)
        d = dist_to_integers(t)
        mask = np.asarray(d) >= SNAP
        s = np.abs(t) + 1.0 / np.where(mask, d, 1.0)
        out = np.where(mask, self.c1 * np.exp(-self.c2 * s), 0.0)
        return float(out) if out.ndim == 0 else out

    def first_derivative(self, t):
        t = np.asarray(t, dtype=float)
        d = dist_to_integers(t)
        mask = np.asarray(d) >= SNAP
        dd = np.where(mask, d, 1.0)
        # d/dt (1/d) = -sign(t - round(t)) / d^2
        ds = np.sign(t) - np.sign(t - np.round(t)) / dd**2
        out = np.where(mask, -self.c2 * ds * np.asarray(self.value(t)), 0.0)
        return float(out) if out.ndim == 0 else out


def eval_phi_time(spec, t):
    return spec.value(t)


def eval_phi_derivative(spec, t, j):
    return spec.derivative(t, j)


@dataclass
class DeepZeroReport:
    """Per-order maxima of ``|Phi^(j)| / envelope`` over a grid."""

    profile: DeepZeroProfile
    max_ratio: dict = field(default_factory=dict)
    argmax: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r <= 1.0 for r in self.max_ratio.values())

    def to_dict(self):
        return {
            "c1": self.profile.c1,
            "c2": self.profile.c2,
            "max_ratio": {str(j): r for j, r in sorted(self.max_ratio.items())},
            "argmax": {str(j): x for j, x in sorted(self.argmax.items())},
            "passed": self.passed,
        }


def _log_abs(values):
    v = np.abs(np.asarray(values, dtype=float))
    with np.errstate(divide="ignore"):
        return np.log(v)


def verify_deep_zero(spec, profile, grid, derivative_order=0):
    """Check ``|Phi^(j)(t)| <= envelope(t)`` on ``grid`` for ``j <= derivative_order``.

    Ratios are formed in the log domain so that points close to an integer,
    where both sides underflow, do not produce ``0/0``.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("verify_deep_zero: empty grid")
    if derivative_order < 0:
        raise ValueError("derivative_order must be >= 0")
    log_env = profile.log_envelope(grid)
    report = DeepZeroReport(profile)
    for j in range(derivative_order + 1):
        logv = _log_abs(spec.derivative(grid, j))
        with np.errstate(invalid="ignore"):
            logr = np.where(np.isneginf(logv), -np.inf, logv - log_env)
        i = int(np.argmax(logr))
        with np.errstate(over="ignore"):
            report.max_ratio[j] = float(np.exp(logr[i]))
        report.argmax[j] = float(grid[i])
    return report


def fit_envelope(spec, grid, derivative_order=0, c1_max=None):
    """Fit envelope constants ``(c1, c2)`` to ``spec`` on ``grid``.

    With ``c1_max`` given, returns the largest ``c2`` admissible with
    ``c1 <= c1_max`` together with the smallest matching ``c1``; refining the
    grid can then only lower ``c2``.  Without a cap the largest ``c2`` is
    unbounded on a finite grid, so the tightest envelope is returned instead:
    the log-domain line ``log c1 - c2 s`` lying above every sample with the
    smallest total gap (a two-variable linear program).  On exact envelope
    data both modes recover the generating constants.

    Zero samples impose no constraint and are skipped.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size < 2:
        raise ValueError("fit_envelope needs at least two grid points")
    d = dist_to_integers(grid)
    keep = d >= SNAP
    grid, d = grid[keep], d[keep]
    s = np.abs(grid) + 1.0 / d
    y = np.max(np.vstack([_log_abs(spec.derivative(grid, j)) for j in range(derivative_order + 1)]), axis=0)
    ok = np.isfinite(y)
    s, y = s[ok], y[ok]
    if s.size < 2 or np.ptp(s) == 0:
        raise DegenerateDataError("fit_envelope: fewer than two distinct usable samples")

    if c1_max is not None:
        log_cap = math.log(c1_max)
        c2 = float(np.min((log_cap - y) / s))
        if not c2 > 0:
            raise DegenerateDataError(f"no positive c2 admissible with c1 <= {c1_max}")
        log_c1 = float(np.max(y + c2 * s))
        return DeepZeroProfile(math.exp(log_c1) * (1 + _C1_SLACK), c2)
    c, c2 = tight_log_envelope(s, y)
    return DeepZeroProfile(c, c2)


def tight_log_envelope(s, y):
    """Tightest line ``log c - rate * s`` lying above the points ``(s, y)``.

    "Tightest" means the smallest summed vertical gap, which makes this a
    two-variable linear program.  Returns ``(c, rate)``; ``rate`` is positive
    for data that decreases overall.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if s.size < 2 or np.ptp(s) == 0:
        raise DegenerateDataError("need at least two distinct abscissae")
    # variables (L, rate): minimise n*L - rate*sum(s)  s.t.  -L + rate*s_i <= -y_i
    res = linprog(
        c=[s.size, -float(np.sum(s))],
        A_ub=np.column_stack([-np.ones_like(s), s]),
        b_ub=-y,
        bounds=[(None, None), (0, None)],
        method="highs",
    )
    if res.status != 0:
        raise DegenerateDataError(f"envelope LP failed: {res.message}")
    rate = float(res.x[1])
    if not rate > 0:
        raise DegenerateDataError("tightest envelope has non-positive rate")
    log_c = float(np.max(y + rate * s))
    return math.exp(log_c) * (1 + _C1_SLACK), rate
