"""Frequency side of the generator: phi = FT(Phi), periodization, Poisson sums.

Transform convention: ``phi(x) = int exp(-2 pi i t x) Phi(t) dt``.  Because
``Phi`` is real and even this reduces to ``2 int_0^T Phi(t) cos(2 pi t x) dt``,
evaluated with the trapezoid rule.  The trapezoid rule on a smooth, rapidly
decaying integrand has an error equal to the aliased copies
``phi(x +- m/h)``, so accuracy is controlled by keeping ``|x|`` well below
``1/(2h)``; that limit is the *band* and is enforced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BandExceededError, DegenerateDataError
from .generator import GeneratorSpec, dist_to_integers, tight_log_envelope

BAND_GUARD = 4.0
_CHUNK = 256


@dataclass(frozen=True)
class GeneratorPair:
    """``Phi`` together with the quadrature that produces ``phi``.

    Parameters
    ----------
    spec : GeneratorSpec
    truncation : float
        Time cutoff ``T``; defaults to ``6 + sqrt(36/a)``.
    step : float
        Trapezoid step ``h``.
    error_budget : float
        Target absolute accuracy of ``phi`` inside the band.
    """

    spec: GeneratorSpec = field(default_factory=GeneratorSpec)
    truncation: float | None = None
    step: float = 1.0 / 256
    error_budget: float = 1e-9

    def __post_init__(self):
        if self.truncation is None:
            object.__setattr__(self, "truncation", 6.0 + math.sqrt(36.0 / self.spec.gaussian_rate))
        if not (self.truncation > 0 and self.step > 0 and self.error_budget > 0):
            raise ValueError("truncation, step and error_budget must be positive")
        if self.step * 2 * (BAND_GUARD + 1) > 1:
            raise ValueError("step too coarse: band would be empty")
        # Phi <= exp(-a t^2); Gaussian tail integral beyond T
        a, T = self.spec.gaussian_rate, self.truncation
        tail = math.exp(-a * T * T) * (1 + 1 / (2 * a * T))
        if tail > self.error_budget / 4:
            raise ValueError(f"truncation {T} leaves tail {tail:.3g} above error_budget/4")
        n = int(round(T / self.step))
        nodes = np.arange(n + 1) * self.step
        weights = np.full(n + 1, 2 * self.step)
        weights[0] = weights[-1] = self.step
        object.__setattr__(self, "_nodes", nodes)
        object.__setattr__(self, "_weighted", weights * self.spec.value(nodes))

    @property
    def band(self):
        """Largest ``|x|`` the step resolves: ``1/(2h) - 4``."""
        return 1.0 / (2 * self.step) - BAND_GUARD

    @property
    def nodes(self):
        return self._nodes

    def _check_band(self, xs):
        if xs.size and np.max(np.abs(xs)) > self.band:
            raise BandExceededError(
                f"|x| = {np.max(np.abs(xs)):.6g} exceeds band {self.band:.6g}; rebuild with a smaller step"
            )

    def _transform(self, xs, weights, kernel):
        xs = np.asarray(xs, dtype=float)
        shape = xs.shape
        xs = xs.ravel()
        self._check_band(xs)
        out = np.empty(xs.size)
        # each output is a row sum over a contiguous array: same reduction
        # order whatever the batch size
        for lo in range(0, xs.size, _CHUNK):
            blk = xs[lo:lo + _CHUNK]
            arg = (2 * np.pi) * np.multiply.outer(np.abs(blk), self._nodes)
            out[lo:lo + _CHUNK] = np.sum(kernel(arg) * weights, axis=1)
        return out.reshape(shape)

    def fourier_grid(self, xs):
        """``phi`` at every point of ``xs`` (any shape)."""
        return self._transform(xs, self._weighted, np.cos)

    def fourier_eval(self, x):
        return float(self.fourier_grid(np.array([x]))[0])

    def fourier_derivative_grid(self, xs):
        """``phi'(x) = -4 pi int_0^T t Phi(t) sin(2 pi t x) dt``."""
        xs = np.asarray(xs, dtype=float)
        w = -2 * np.pi * self._nodes * self._weighted
        return np.sign(xs) * self._transform(xs, w, np.sin)

    def derivative_sup_bound(self):
        """Upper bound on ``sup |phi'|``: ``2 pi int |t| Phi(t) dt``."""
        return float(2 * np.pi * np.sum(self._nodes * self._weighted))


def fourier_eval(gp, x):
    return gp.fourier_eval(x)


def fourier_grid(gp, xs):
    return gp.fourier_grid(xs)


def gaussian_transform(a, x):
    """Closed form of the transform of ``exp(-a t^2)``."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.pi / a) * np.exp(-np.pi**2 * x * x / a)


@dataclass(frozen=True)
class PeriodizationEvaluator:
    """``P(Phi)(t) = sum_{|k| <= K} Phi(t + k)``."""

    spec: GeneratorSpec = field(default_factory=GeneratorSpec)
    fold_count: int = 8

    def __post_init__(self):
        if self.fold_count < 1:
            raise ValueError("fold_count must be >= 1")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        ks = np.arange(-self.fold_count, self.fold_count + 1)
        vals = self.spec.value(np.add.outer(t, ks))
        return np.sum(vals, axis=-1)

    def tail_bound(self, profile=None):
        """Bound on the dropped terms ``|k| > K`` for ``t`` in [0, 1).

        With a ``DeepZeroProfile`` this is ``2 c1 e^{-c2 K} / (1 - e^{-c2})``;
        otherwise the Gaussian majorant ``Phi <= exp(-a t^2)`` is used.
        """
        K = self.fold_count
        if profile is not None:
            return 2 * profile.c1 * math.exp(-profile.c2 * K) / (1 - math.exp(-profile.c2))
        a = self.spec.gaussian_rate
        # |t + k| >= K for t in [0,1), |k| > K; sum_{j>=K} e^{-a j^2} <= e^{-aK^2}/(1-e^{-2aK})
        return 2 * math.exp(-a * K * K) / (1 - math.exp(-2 * a * K))


def periodize(pe, t):
    v = pe(t)
    return float(v) if np.ndim(v) == 0 else v


def fourier_series(gp, t, n_max):
    """``sum_{|n| <= n_max} phi(n) e^{2 pi i n t}`` for real even ``phi``."""
    coeffs = gp.fourier_grid(np.arange(n_max + 1, dtype=float))
    t = np.asarray(t, dtype=float)
    n = np.arange(1, n_max + 1)
    return coeffs[0] + 2 * np.sum(coeffs[1:] * np.cos(2 * np.pi * np.multiply.outer(t, n)), axis=-1)


def poisson_discrepancy(gp, pe, t, n_max):
    """``|P(Phi)(t) - sum_{|n|<=n_max} phi(n) e^{2 pi i n t}|``, elementwise in ``t``."""
    out = np.abs(pe(t) - fourier_series(gp, t, n_max))
    return float(out) if np.ndim(out) == 0 else out


def series_tail_estimate(gp, n_max):
    """A-posteriori size of the dropped Fourier terms: ``2 sum_{n_max<n<=band} |phi(n)|``."""
    n = np.arange(n_max + 1, int(gp.band) + 1, dtype=float)
    return float(2 * np.sum(np.abs(gp.fourier_grid(n))))


def poisson_tolerance(gp, pe, n_max):
    """``10 * (quadrature budget + periodization tail + series tail)``."""
    return 10 * (gp.error_budget + pe.tail_bound() + series_tail_estimate(gp, n_max))


def theta_identity_gap(a, t, fold_count=8, n_max=32):
    """Gap in ``sum_k e^{-a (t+k)^2} = sqrt(pi/a) sum_n e^{-pi^2 n^2/a} e^{2 pi i n t}``.

    Both sides in closed form; this checks the identity independently of the
    quadrature in ``GeneratorPair``.
    """
    t = np.asarray(t, dtype=float)
    k = np.arange(-fold_count, fold_count + 1)
    lhs = np.sum(np.exp(-a * np.add.outer(t, k) ** 2), axis=-1)
    n = np.arange(1, n_max + 1)
    c = gaussian_transform(a, n)
    rhs = gaussian_transform(a, 0.0) + 2 * np.sum(c * np.cos(2 * np.pi * np.multiply.outer(t, n)), axis=-1)
    return np.abs(lhs - rhs)


@dataclass
class FlatZeroReport:
    ts: np.ndarray
    values: np.ndarray
    c_hat: float
    c2_hat: float
    local_orders: np.ndarray
    q_max: float
    envelope_ok: bool

    @property
    def passed(self):
        orders = self.local_orders
        monotone = bool(np.all(np.diff(orders) >= 0)) if orders.size > 1 else True
        return self.envelope_ok and self.c2_hat > 0 and monotone and bool(orders[-1] > self.q_max)

    def to_dict(self):
        return {
            "t": self.ts.tolist(),
            "P": self.values.tolist(),
            "c_hat": self.c_hat,
            "c2_hat": self.c2_hat,
            "local_orders": self.local_orders.tolist(),
            "passed": self.passed,
        }


def flat_zero_report(ts, values, q_max=4.0):
    """Decide whether samples ``values`` at ``ts`` behave like an infinite-order zero at 0.

    Two things are required: an envelope ``c e^{-c2/d(t,Z)}`` with ``c2 > 0``
    that dominates every sample, and local polynomial orders
    ``log(P_i/P_j) / log(d_i/d_j)`` that grow as ``d`` shrinks and exceed
    ``q_max`` on the innermost pair.  A simple zero has orders near 1.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if ts.size < 2:
        raise ValueError("flat zero check needs at least two points")
    d = np.asarray(dist_to_integers(ts))
    if np.any(d <= 0) or np.any(ts <= 0) or np.any(ts > 0.5):
        raise ValueError("flat zero grid must lie in (0, 1/2]")
    order = np.argsort(-d)
    ts, d, values = ts[order], d[order], values[order]
    if np.any(values <= 0):
        raise DegenerateDataError("flat zero check needs positive samples")
    s = 1.0 / d
    y = np.log(values)
    try:
        c_hat, c2_hat = tight_log_envelope(s, y)
        env_ok = bool(np.all(y <= math.log(c_hat) - c2_hat * s))
    except DegenerateDataError:
        c_hat, c2_hat, env_ok = float("nan"), 0.0, False
    orders = np.diff(y) / np.diff(np.log(d))
    return FlatZeroReport(ts, values, c_hat, c2_hat, orders, q_max, env_ok)


def flat_zero_check(pe, ts=(0.3, 0.1, 0.05, 0.02), q_max=4.0):
    ts = np.asarray(ts, dtype=float)
    return flat_zero_report(ts, pe(ts), q_max)


@dataclass
class DecayReport:
    xs: np.ndarray
    majorant: np.ndarray
    slope: float
    q_max: float

    @property
    def passed(self):
        return self.slope < -self.q_max

    def to_dict(self):
        return {"slope": self.slope, "q_max": self.q_max, "passed": self.passed}


def polynomial_decay_report(xs, values, q_max=4.0, floor=0.0):
    """Log-log slope of the decreasing majorant ``max_{y >= x} |v(y)|``.

    The majorant removes the effect of sign changes in ``v``.  Decay faster
    than ``|x|^{-q_max}`` over the sampled range means ``slope < -q_max``.
    Samples at or below ``floor`` (unresolved by the quadrature) are dropped.
    """
    xs = np.abs(np.asarray(xs, dtype=float))
    values = np.abs(np.asarray(values, dtype=float))
    order = np.argsort(xs)
    xs, values = xs[order], values[order]
    keep = (xs > 0) & (values > floor)
    xs, values = xs[keep], values[keep]
    if xs.size < 2:
        raise DegenerateDataError("need at least two nonzero abscissae")
    majorant = np.maximum.accumulate(values[::-1])[::-1]
    ok = majorant > 0
    slope = float(np.polyfit(np.log(xs[ok]), np.log(majorant[ok]), 1)[0])
    return DecayReport(xs, majorant, slope, q_max)


def strip_decay_check(gp, xs, q_max=4.0):
    """Real-axis decay of ``phi`` as a proxy for analyticity in a strip."""
    return polynomial_decay_report(xs, gp.fourier_grid(xs), q_max, floor=gp.error_budget)
