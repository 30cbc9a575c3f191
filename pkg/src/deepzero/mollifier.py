"""Sinc-power multipliers, their B-spline kernels, flat bumps and pairings.

``h_eps(x) = (sin(2 pi eps x) / (2 pi eps x))**N`` is the Fourier transform of
``H_eps``, the N-fold self-convolution of ``1_[-eps, eps] / (2 eps)``.  The
latter is a rescaled cardinal B-spline, evaluated here in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BandExceededError, DegenerateDataError
from .lattice import DecayFit, decay_fit

_GL_NODES = 32
_MAX_ORDER = 12


@dataclass(frozen=True)
class MollifierPair:
    eps: float = 0.02
    order: int = 4

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.order < 2 or self.order % 2:
            raise ValueError(f"order N must be a positive even integer, got {self.order}")
        if self.order > _MAX_ORDER:
            raise ValueError(f"order N above {_MAX_ORDER} is not supported")

    @property
    def radius(self):
        """Support half-width ``N * eps`` of ``H_eps``."""
        return self.order * self.eps

    def knots(self):
        return (np.arange(self.order + 1) - self.order / 2) * 2 * self.eps


def h_eps(mp, x):
    """Sinc power; exactly 1 at the origin."""
    x = np.asarray(x, dtype=float)
    out = np.sinc(2 * mp.eps * x) ** mp.order
    return float(out) if out.ndim == 0 else out


def cardinal_bspline(x, order):
    """Cardinal B-spline ``M_N`` on ``[0, N]`` (N-fold convolution of ``1_[0,1]``).

    Uses the truncated-power form on the left half ``x <= N/2`` and symmetry
    on the right, which keeps the number of alternating terms (and the
    cancellation) small.
    """
    x = np.asarray(x, dtype=float)
    y = np.where(x > order / 2, order - x, x)
    k = np.arange(order + 1)
    signs = (-1.0) ** k * np.array([math.comb(order, int(j)) for j in k])
    diff = np.subtract.outer(y, k)
    terms = signs * np.where(diff > 0, diff, 0.0) ** (order - 1)
    out = np.sum(terms, axis=-1) / math.factorial(order - 1)
    out = np.where((x > 0) & (x < order), out, 0.0)
    return np.maximum(out, 0.0)


def H_eps(mp, t):
    """``((1/(2 eps)) 1_eps)^{*N}(t)``, supported on ``[-N eps, N eps]``."""
    t = np.asarray(t, dtype=float)
    # evaluate at -|t| so the kernel is exactly even
    u = mp.order / 2 - np.abs(t) / (2 * mp.eps)
    out = cardinal_bspline(u, mp.order) / (2 * mp.eps)
    return float(out) if out.ndim == 0 else out


def _gauss_legendre_on_knots(knots, n=_GL_NODES):
    x, w = np.polynomial.legendre.leggauss(n)
    lo, hi = knots[:-1, None], knots[1:, None]
    nodes = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    return nodes, weights


def H_mass(mp):
    """``int H_eps``; Gauss-Legendre on each knot interval is exact for the spline pieces."""
    nodes, weights = _gauss_legendre_on_knots(mp.knots(), n=mp.order)
    return float(np.sum(weights * H_eps(mp, nodes)))


def H_transform(mp, x):
    """Fourier transform of ``H_eps`` by per-interval Gauss-Legendre quadrature."""
    x = np.asarray(x, dtype=float)
    # 32 nodes per interval integrate cos accurately up to ~16 rad per interval
    if x.size and np.max(np.abs(x)) * 2 * np.pi * 2 * mp.eps > 16:
        raise BandExceededError("frequency too large for the kernel quadrature")
    nodes, weights = _gauss_legendre_on_knots(mp.knots())
    wh = weights * H_eps(mp, nodes)
    return np.sum(wh * np.cos(2 * np.pi * np.multiply.outer(x, nodes)), axis=-1)


def duality_check(mp, grid):
    """``max |FT(H_eps) - h_eps|`` over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    return float(np.max(np.abs(H_transform(mp, grid) - h_eps(mp, grid))))


# --- flat bump ------------------------------------------------------------


@dataclass(frozen=True)
class BumpTestFunction:
    """``scale * exp(-d^2 / (d^2 - t^2))`` on ``(-d, d)``, zero elsewhere."""

    d: float = 0.3
    scale: float = 1.0
    max_order: int = 4
    sup_grid: int = 20001
    sup_norms: tuple = field(init=False, repr=False)
    sup_refinement: float = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.d < 0.5:
            raise ValueError(f"bump radius d must lie in (0, 1/2), got {self.d}")
        coarse = np.linspace(-self.d, self.d, self.sup_grid)
        fine = np.linspace(-self.d, self.d, 2 * self.sup_grid - 1)
        c = [float(np.max(np.abs(self.derivative(coarse, k)))) for k in range(self.max_order + 1)]
        f = [float(np.max(np.abs(self.derivative(fine, k)))) for k in range(self.max_order + 1)]
        object.__setattr__(self, "sup_norms", tuple(f))
        object.__setattr__(self, "sup_refinement", max(abs(a - b) / b for a, b in zip(c, f)))

    def _g_derivative(self, t, m):
        d = self.d
        return -(d / 2) * math.factorial(m) * (1 / (d - t) ** (m + 1) + (-1) ** m / (d + t) ** (m + 1))

    def derivative(self, t, k=0):
        """``k``-th derivative, from ``Psi^(j+1) = sum_i C(j,i) g^(i+1) Psi^(j-i)``."""
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < self.d
        ti = np.where(inside, t, 0.0)
        with np.errstate(under="ignore"):
            base = np.where(inside, self.scale * np.exp(-self.d**2 / (self.d**2 - ti**2)), 0.0)
        live = base > 0
        tl = np.where(live, ti, 0.0)
        derivs = [base]
        gd = [None] + [np.where(live, self._g_derivative(tl, m), 0.0) for m in range(1, k + 1)]
        for j in range(k):
            acc = np.zeros_like(base)
            for i in range(j + 1):
                acc = acc + math.comb(j, i) * gd[i + 1] * derivs[j - i]
            derivs.append(acc)
        out = derivs[k]
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return self.derivative(t, 0)

    def sup_norm(self, k):
        if k > self.max_order:
            raise ValueError(f"sup norm of order {k} not tabulated (max_order={self.max_order})")
        return self.sup_norms[k]

    def transform(self, x, nodes=4001):
        """``psi = FT(Psi)`` by the trapezoid rule; exact to rounding for a flat bump."""
        x = np.asarray(x, dtype=float)
        t = np.linspace(0.0, self.d, nodes)
        w = np.full(nodes, 2 * (t[1] - t[0]))
        w[0] = w[-1] = t[1] - t[0]
        wv = w * self(t)
        out = np.empty(x.size)
        flat = x.ravel()
        for lo in range(0, flat.size, 256):
            blk = flat[lo:lo + 256]
            out[lo:lo + 256] = np.sum(np.cos(2 * np.pi * np.multiply.outer(blk, t)) * wv, axis=1)
        return out.reshape(x.shape)


def convolve_bump(mp, bump, t, k=0):
    """``(Psi^(k) * H_eps)(t)`` by Gauss-Legendre over the kernel's knot intervals."""
    t = np.asarray(t, dtype=float)
    nodes, weights = _gauss_legendre_on_knots(mp.knots())
    wh = weights * H_eps(mp, nodes)
    return np.sum(bump.derivative(np.subtract.outer(t, nodes), k) * wh, axis=-1)


_FD5 = {1: np.array([1, -8, 0, 8, -1]) / 12.0, 2: np.array([-1, 16, -30, 16, -1]) / 12.0}


@dataclass
class SmoothingReport:
    k: int
    lhs: float
    rhs: float
    support_radius: float
    max_outside: float

    @property
    def passed(self):
        return self.lhs <= self.rhs * (1 + 1e-6) and self.max_outside == 0.0

    def to_dict(self):
        return {"k": self.k, "lhs": self.lhs, "rhs": self.rhs, "max_outside": self.max_outside,
                "passed": self.passed}


def smoothing_inequality_check(mp, bump, k, n_grid=4001, fd_step=2e-3):
    """Compare ``sup|(Psi * H_eps)^(k)|`` with ``sup|Psi^(k)| * ||H_eps||_1``.

    The left side differentiates the computed convolution with a five-point
    stencil (k <= 2) or, for higher k, convolves ``Psi^(k)`` directly.  Values
    outside ``[-(d + N eps), d + N eps]`` must be exactly zero.
    """
    R = bump.d + mp.radius
    if not R < 0.5:
        raise ValueError(f"need d + N*eps < 1/2, got {bump.d} + {mp.radius} = {R}")
    t = np.linspace(-R - 0.05, R + 0.05, n_grid)
    if k == 0:
        vals = convolve_bump(mp, bump, t)
    elif k in _FD5:
        offs = np.arange(-2, 3) * fd_step
        samples = np.stack([convolve_bump(mp, bump, t + o) for o in offs], axis=-1)
        vals = samples @ _FD5[k] / fd_step**k
    else:
        vals = convolve_bump(mp, bump, t, k)
    outside = np.abs(t) >= R
    base = convolve_bump(mp, bump, t)
    return SmoothingReport(
        k=k,
        lhs=float(np.max(np.abs(vals))),
        rhs=bump.sup_norm(k) * H_mass(mp),
        support_radius=R,
        max_outside=float(np.max(np.abs(base[outside]))) if np.any(outside) else 0.0,
    )


# --- elements of the frequency-side class --------------------------------


@dataclass(frozen=True)
class KHatElement:
    """``f(x) = sum_j c_j (2 pi i x)^{k_j} phi_j(x)``.

    ``terms`` holds ``(k_j, GeneratorPair)`` or ``(k_j, GeneratorPair, c_j)``.
    """

    terms: tuple

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ValueError("KHatElement needs at least one term")
        norm = []
        for term in self.terms:
            k, gp, *rest = term
            if k < 0:
                raise ValueError("term orders must be nonnegative")
            norm.append((int(k), gp, complex(rest[0]) if rest else 1.0 + 0j))
        object.__setattr__(self, "terms", tuple(norm))

    @property
    def band(self):
        return min(gp.band for _, gp, _ in self.terms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for k, gp, c in self.terms:
            out += c * (2j * np.pi * x) ** k * gp.fourier_grid(x)
        return out

    def scaled(self, s):
        return KHatElement(tuple((k, gp, c * s) for k, gp, c in self.terms))

    def __add__(self, other):
        return KHatElement(self.terms + other.terms)


def ensure_integrable(f, mp, x_max=None, n_samples=400):
    """Return a pair whose ``f * h_eps`` decays faster than ``|x|^-2``, raising N if needed."""
    from .spectrum import polynomial_decay_report

    x_max = f.band if x_max is None else x_max
    xs = np.geomspace(1.0, x_max, n_samples)
    fx = np.abs(f(xs))
    order = mp.order
    while order <= _MAX_ORDER:
        cand = MollifierPair(mp.eps, order)
        rep = polynomial_decay_report(xs, fx * h_eps(cand, xs), q_max=2.0)
        if rep.passed:
            return cand
        order += 2
    raise DegenerateDataError("f * h_eps is not integrable for any supported N")


class _PairingQuadrature:
    """Shared frequency grid for pairings ``<f h_eps, e^{2 pi i n x} psi>``.

    The trapezoid rule over ``x`` aliases the pairing at ``n`` with the ones
    at ``n +- m/dx``; with ``dx = 1/(2 (n_limit + 12))`` those sit at least 24
    units away where the Gaussian decay of ``Phi`` makes them negligible.
    """

    def __init__(self, f, mp, bump, n_limit):
        self.n_limit = int(n_limit)
        self.dx = 1.0 / (2 * (self.n_limit + 12))
        X = f.band
        m = int(X / self.dx)
        self.x = np.arange(-m, m + 1) * self.dx
        g = f(self.x) * h_eps(mp, self.x) * bump.transform(self.x)
        self.g = g
        self.noise_floor = 1e3 * np.finfo(float).eps * float(np.sum(np.abs(g)) * self.dx)

    def pairing(self, n):
        if abs(n) > self.n_limit:
            raise BandExceededError(f"|n| = {abs(n)} beyond the pairing band {self.n_limit}")
        return complex(np.sum(self.g * np.exp(2j * np.pi * n * self.x)) * self.dx)


def pairing(f, mp, bump, n):
    """``<F_eps, Psi(t - n)> = int f(x) h_eps(x) psi(x) e^{2 pi i n x} dx``."""
    return _PairingQuadrature(f, mp, bump, max(abs(int(n)), 1)).pairing(int(n))


@dataclass
class PairingExperiment:
    ns: np.ndarray
    pairings: np.ndarray
    used: np.ndarray
    truncated: list
    fit: DecayFit | None

    @property
    def rate(self):
        return -math.log(self.fit.r_hat) if self.fit is not None else float("nan")

    @property
    def passed(self):
        return self.fit is not None and self.fit.r_hat < 1

    def envelope(self):
        if self.fit is None:
            return np.full(self.ns.size, np.nan)
        return self.fit.c_hat * self.fit.r_hat ** np.abs(self.ns)

    def rows(self):
        """``(n, |pairing|, fitted envelope)`` rows."""
        return [(int(n), float(abs(p)), float(e)) for n, p, e in zip(self.ns, self.pairings, self.envelope())]


def pairing_decay_experiment(f, mp, bump, n_range=range(-8, 9), n_limit=12):
    """Pairings over ``n_range`` and an exponential fit of their magnitudes.

    Indices beyond ``n_limit`` are dropped and listed in ``truncated``;
    pairings below the quadrature noise floor are kept in the output but
    excluded from the fit.
    """
    ns = np.array(sorted(set(int(n) for n in n_range)))
    truncated = [int(n) for n in ns if abs(n) > n_limit]
    ns = ns[np.abs(ns) <= n_limit]
    quad = _PairingQuadrature(f, mp, bump, n_limit)
    vals = np.array([quad.pairing(int(n)) for n in ns])
    used = np.abs(vals) > quad.noise_floor
    try:
        fit = decay_fit(ns[used], np.abs(vals[used]))
    except DegenerateDataError:
        fit = None
    return PairingExperiment(ns, vals, used, truncated, fit)


def periodized_pairing(f, mp, bump, n_max=8):
    """``sum_{|n| <= n_max}`` of the pairings, summed by ascending ``|n|`` then sign."""
    quad = _PairingQuadrature(f, mp, bump, n_max)
    total = quad.pairing(0)
    for n in range(1, n_max + 1):
        total += quad.pairing(n)
        total += quad.pairing(-n)
    return total


@dataclass
class DSweep:
    ds: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float

    @property
    def passed(self):
        return self.slope < 0

    def rows(self):
        fitted = np.exp(self.intercept + self.slope / self.ds)
        return [(float(d), float(abs(v)), float(e)) for d, v, e in zip(self.ds, self.values, fitted)]


def d_sweep(f, mp, ds=(0.4, 0.3, 0.2, 0.15, 0.1), n_max=8):
    """Periodized pairing for shrinking bump radii; fit ``log|v| = alpha + beta / d``."""
    ds = np.asarray(ds, dtype=float)
    vals = np.array([periodized_pairing(f, mp, BumpTestFunction(float(d), max_order=0), n_max) for d in ds])
    beta, alpha = np.polyfit(1.0 / ds, np.log(np.abs(vals)), 1)
    return DSweep(ds, vals, float(beta), float(alpha))
