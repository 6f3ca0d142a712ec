"""Lévy measure families supported on [-1, 1] minus the origin.

A measure is described one half-line at a time.  ``side`` is ``+1`` for the
positive jumps and ``-1`` for the negative ones, and densities are always
evaluated at the jump magnitude ``x = |jump| > 0``.

Families that admit them provide closed forms for

* ``side_tail(side, eps)``      = int_eps^1 rho_side(x) dx
* ``side_moment(side, eps, k)`` = int_0^eps x^k rho_side(x) dx

and return ``None`` otherwise, in which case :mod:`levy_lil.levy_model` falls
back to quadrature.  Divergent moments are reported as ``math.inf``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .errors import DomainError

SIDES = (1, -1)


def upper_gamma(s: float, x: float) -> float:
    """Upper incomplete gamma Gamma(s, x) for any real s and x > 0."""
    if x <= 0:
        raise DomainError("upper_gamma needs x > 0")
    if s > 0:
        return float(special.gammaincc(s, x) * special.gamma(s))
    if s == int(s):
        start, value = 0.0, float(special.exp1(x))
    else:
        start = s + math.ceil(-s)
        value = float(special.gammaincc(start, x) * special.gamma(start))
    # downward recurrence Gamma(a, x) = (Gamma(a+1, x) - x^a e^-x) / a
    a = start
    while a > s + 0.5:
        a -= 1.0
        value = (value - x**a * math.exp(-x)) / a
    return value


def _power_integral(coef, a, b, q):
    """int_a^b coef * x^(q-1) dx for 0 < a <= b, stable near q = 0."""
    if b <= a:
        return 0.0
    r = math.log(b / a)
    if q == 0:
        return coef * r
    return coef * a**q * math.expm1(q * r) / q


class MeasureFamily:
    """Base class; subclasses describe one parametric family."""

    name = "measure"
    symmetric = False

    def density(self, x, side):
        raise NotImplementedError

    def log_density(self, y, side):
        """log rho_side(e^y); overridden where exp(y) would underflow."""
        with np.errstate(divide="ignore"):
            return np.log(self.density(np.exp(y), side))

    def has_side(self, side) -> bool:
        return True

    def breakpoints(self, side) -> tuple:
        """Magnitudes in (0, 1) where the density is not smooth."""
        return ()

    def power_region(self, side):
        """``(coef, p, x_max)`` with density == coef * x**p on (0, x_max], or None."""
        return None

    def bounded_variation(self) -> bool:
        raise NotImplementedError

    def side_tail(self, side, eps):
        return None

    def side_moment(self, side, eps, k):
        return None

    def params(self) -> dict:
        return {}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class NoJumps(MeasureFamily):
    """The zero measure (pure Brownian motion with drift)."""

    name = "none"
    symmetric = True

    def density(self, x, side):
        return np.zeros_like(np.asarray(x, dtype=float))

    def log_density(self, y, side):
        return np.full_like(np.asarray(y, dtype=float), -np.inf)

    def has_side(self, side):
        return False

    def bounded_variation(self):
        return True

    def side_tail(self, side, eps):
        return 0.0

    def side_moment(self, side, eps, k):
        return 0.0


class TwoSidedPolynomial(MeasureFamily):
    """Density c1 x^-(1+alpha1) on (0, 1] and c2 |x|^-(1+alpha2) on [-1, 0)."""

    name = "two_sided_polynomial"

    def __init__(self, c1, alpha1, c2=0.0, alpha2=None):
        alpha2 = alpha1 if alpha2 is None else alpha2
        self.c1, self.alpha1 = float(c1), float(alpha1)
        self.c2, self.alpha2 = float(c2), float(alpha2)
        if self.c1 < 0 or self.c2 < 0:
            raise DomainError("c1 and c2 must be nonnegative")
        if self.c1 + self.c2 <= 0:
            raise DomainError("c1 + c2 must be positive")
        if not 2 > self.alpha1 >= self.alpha2:
            raise DomainError("need 2 > alpha1 >= alpha2")
        self.symmetric = self.c1 == self.c2 and self.alpha1 == self.alpha2

    def _side(self, side):
        return (self.c1, self.alpha1) if side > 0 else (self.c2, self.alpha2)

    def has_side(self, side):
        return self._side(side)[0] > 0

    def density(self, x, side):
        c, a = self._side(side)
        x = np.asarray(x, dtype=float)
        return np.where((x > 0) & (x <= 1), c * np.power(x, -1.0 - a), 0.0)

    def log_density(self, y, side):
        c, a = self._side(side)
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(y <= 0, math.log(c) - (1.0 + a) * y if c > 0 else -np.inf, -np.inf)

    def power_region(self, side):
        c, a = self._side(side)
        return (c, -1.0 - a, 1.0)

    def bounded_variation(self):
        return all(c == 0 or a < 1 for c, a in (self._side(1), self._side(-1)))

    def side_tail(self, side, eps):
        c, a = self._side(side)
        if c == 0 or eps >= 1:
            return 0.0
        return _power_integral(c, eps, 1.0, -a)

    def side_moment(self, side, eps, k):
        c, a = self._side(side)
        if c == 0:
            return 0.0
        q = k - a
        if q <= 0:
            return math.inf
        return c * eps**q / q

    def params(self):
        return {"c1": self.c1, "alpha1": self.alpha1, "c2": self.c2, "alpha2": self.alpha2}


class SymmetricLogPolynomial(MeasureFamily):
    """Symmetric measure with tail scale * eps^-alpha * |log eps|^-gamma_exp.

    The formula holds exactly for eps below ``cutoff``; above it the density
    decays like ``(1 - x)^p`` so that the tail reaches 0 at x = 1 while staying
    continuous at the cutoff.
    """

    name = "symmetric_log_polynomial"
    symmetric = True

    def __init__(self, alpha, gamma_exp=0.0, scale=1.0):
        self.alpha, self.gamma_exp, self.scale = float(alpha), float(gamma_exp), float(scale)
        if not 0 < self.alpha <= 2:
            raise DomainError("alpha must lie in (0, 2]")
        if self.alpha == 2 and self.gamma_exp <= 1:
            raise DomainError("alpha = 2 needs gamma_exp > 1 for a finite second moment")
        if self.scale <= 0:
            raise DomainError("scale must be positive")
        a, g = self.alpha, self.gamma_exp
        self.cutoff = min(a / (6.0 + a), math.exp(-max(1.0, 2.0 * g / a)))
        log_c = -math.log(self.cutoff)
        self._tail_c = 0.5 * self.scale * self.cutoff**-a * log_c**-g
        self._rho_c = self._tail_c * (a - g / log_c) / self.cutoff
        self.power = (a - g / log_c) * (1 - self.cutoff) / self.cutoff - 1.0

    def density(self, x, side):
        x = np.asarray(x, dtype=float)
        a, g, c = self.alpha, self.gamma_exp, self.cutoff
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = np.clip(x, 1e-300, c)
            log_inv = -np.log(xs)
            inner = 0.5 * self.scale * xs**-a * log_inv**-g * (a - g / log_inv) / xs
            outer = self._rho_c * np.clip((1 - x) / (1 - c), 0.0, None) ** self.power
        out = np.where(x <= c, inner, outer)
        return np.where((x > 0) & (x < 1), out, 0.0)

    def log_density(self, y, side):
        y = np.asarray(y, dtype=float)
        a, g = self.alpha, self.gamma_exp
        below = y <= math.log(self.cutoff)
        L = np.where(below, -y, 1.0)
        inner = math.log(0.5 * self.scale) - (a + 1) * y - g * np.log(L) + np.log(
            np.where(below, a - g / L, 1.0)
        )
        with np.errstate(divide="ignore"):
            outer = np.log(self.density(np.exp(np.where(below, 0.0, y)), side))
        return np.where(below, inner, outer)

    def breakpoints(self, side):
        return (self.cutoff,)

    def bounded_variation(self):
        return self.alpha < 1 or (self.alpha == 1 and self.gamma_exp > 1)

    def side_tail(self, side, eps):
        if eps >= 1:
            return 0.0
        if eps <= self.cutoff:
            return 0.5 * self.scale * eps**-self.alpha * (-math.log(eps)) ** -self.gamma_exp
        return self._tail_c * ((1 - eps) / (1 - self.cutoff)) ** (self.power + 1)

    def _log_integral(self, a, log_inv):
        # int_{log_inv}^inf e^{-a s} s^{-gamma} ds
        g = self.gamma_exp
        if a > 0:
            return a ** (g - 1) * upper_gamma(1 - g, a * log_inv)
        if a == 0 and g > 1:
            return log_inv ** (1 - g) / (g - 1)
        return math.inf

    def side_moment(self, side, eps, k):
        e = min(eps, self.cutoff)
        # integration by parts: -e^k T(e) + k int_0^e x^(k-1) T(x) dx
        inner = self._log_integral(k - self.alpha, -math.log(e))
        if math.isinf(inner):
            return math.inf
        value = -(e**k) * self.side_tail(side, e) + k * 0.5 * self.scale * inner
        if eps > self.cutoff:
            c, p = self.cutoff, self.power
            top = min(eps, 1.0)
            beta = special.beta(k + 1, p + 1)
            inc = special.betainc(k + 1, p + 1, top) - special.betainc(k + 1, p + 1, c)
            value += self._rho_c * (1 - c) ** -p * beta * inc
        return value

    def params(self):
        return {"alpha": self.alpha, "gamma_exp": self.gamma_exp, "scale": self.scale}


class GammaJumps(MeasureFamily):
    """Variance-Gamma jumps of sigma * B(A_t) + mu * A_t, truncated to [-1, 1].

    A is a Gamma subordinator with Laplace exponent a * log(1 + u / b), giving
    the density (a / |x|) exp(mu x / sigma^2 - |x| sqrt(mu^2 + 2 b sigma^2) / sigma^2).
    """

    name = "variance_gamma"

    def __init__(self, a, b, mu=0.0, sigma=1.0):
        self.a, self.b, self.mu, self.sigma = float(a), float(b), float(mu), float(sigma)
        if self.a <= 0 or self.b <= 0:
            raise DomainError("a and b must be positive")
        if self.sigma <= 0:
            raise DomainError("sigma must be positive")
        s2 = self.sigma**2
        drift = self.mu / s2
        spread = math.sqrt(self.mu**2 + 2 * self.b * s2) / s2
        self.kappa = {1: spread - drift, -1: spread + drift}
        self.symmetric = self.mu == 0

    def laplace_exponent(self, u):
        """Laplace exponent of the Gamma subordinator."""
        return self.a * np.log1p(np.asarray(u, dtype=float) / self.b)

    def density(self, x, side):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.a / x * np.exp(-self.kappa[side] * x)
        return np.where((x > 0) & (x <= 1), out, 0.0)

    def log_density(self, y, side):
        y = np.asarray(y, dtype=float)
        out = math.log(self.a) - y - self.kappa[side] * np.exp(np.minimum(y, 0.0))
        return np.where(y <= 0, out, -np.inf)

    def bounded_variation(self):
        return True

    def side_tail(self, side, eps):
        if eps >= 1:
            return 0.0
        k = self.kappa[side]
        return self.a * float(special.exp1(k * eps) - special.exp1(k))

    def side_moment(self, side, eps, k):
        kap = self.kappa[side]
        return self.a * float(special.gamma(k) * special.gammainc(k, kap * eps)) / kap**k

    def params(self):
        return {"a": self.a, "b": self.b, "mu": self.mu, "sigma": self.sigma}


class Tabulated(MeasureFamily):
    """Density samples on a log-spaced grid, interpolated log-linearly.

    Below the first node and above the last one the nearest segment's power law
    is extended (up to |x| = 1).  ``density_neg=None`` means no negative jumps;
    pass the same array twice for a symmetric measure.
    """

    name = "tabulated"

    def __init__(self, x_nodes, density_pos, density_neg=None):
        x = np.asarray(x_nodes, dtype=float)
        if x.ndim != 1 or len(x) < 2:
            raise DomainError("need at least two nodes")
        if np.any(np.diff(x) <= 0) or x[0] <= 0 or x[-1] > 1:
            raise DomainError("nodes must be increasing inside (0, 1]")
        self.x = x
        self._logx = np.log(x)
        self._log = {}
        for side, dens in ((1, density_pos), (-1, density_neg)):
            if dens is None:
                continue
            d = np.asarray(dens, dtype=float)
            if d.shape != x.shape:
                raise DomainError("density samples must match the nodes")
            if np.any(d <= 0):
                raise DomainError("density samples must be positive")
            self._log[side] = np.log(d)
        if not self._log:
            raise DomainError("at least one side needs a density")
        for side in self._log:
            if self._slopes(side)[0] <= -3:
                raise DomainError("density too singular at 0: second moment diverges")
        self.symmetric = (
            len(self._log) == 2 and np.array_equal(self._log[1], self._log[-1])
        )

    def _slopes(self, side):
        return np.diff(self._log[side]) / np.diff(self._logx)

    def has_side(self, side):
        return side in self._log

    def log_density(self, y, side):
        y = np.asarray(y, dtype=float)
        if side not in self._log:
            return np.full_like(y, -np.inf)
        ly = self._log[side]
        s = self._slopes(side)
        out = np.interp(y, self._logx, ly)
        out = np.where(y < self._logx[0], ly[0] + s[0] * (y - self._logx[0]), out)
        out = np.where(y > self._logx[-1], ly[-1] + s[-1] * (y - self._logx[-1]), out)
        return np.where(y <= 0, out, -np.inf)

    def density(self, x, side):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            y = np.log(np.where(x > 0, x, 1.0))
        return np.where((x > 0) & (x <= 1), np.exp(self.log_density(y, side)), 0.0)

    def breakpoints(self, side):
        return tuple(v for v in self.x if v < 1)

    def power_region(self, side):
        if side not in self._log:
            return None
        p = self._slopes(side)[0]
        return (math.exp(self._log[side][0]) / self.x[0] ** p, p, self.x[0])

    def bounded_variation(self):
        return all(self._slopes(side)[0] > -2 for side in self._log)

    def _segments(self, side):
        """(a, b, rho_a, slope) for each power-law piece on (0, 1]."""
        d = np.exp(self._log[side])
        s = self._slopes(side)
        segs = [(0.0, self.x[0], d[0], s[0])]
        segs += [(self.x[i], self.x[i + 1], d[i], s[i]) for i in range(len(s))]
        if self.x[-1] < 1:
            segs.append((self.x[-1], 1.0, d[-1], s[-1]))
        return segs

    def _integral(self, side, lo, hi, k):
        if side not in self._log:
            return 0.0
        total = 0.0
        for a, b, rho, p in self._segments(side):
            lo_s, hi_s = max(a, lo), min(b, hi)
            if hi_s <= lo_s:
                continue
            anchor = b if a == 0 else a
            rho_anchor = rho
            q = k + p + 1
            coef = rho_anchor * anchor**-p
            if lo_s == 0:
                if q <= 0:
                    return math.inf
                total += coef * hi_s**q / q
            else:
                total += _power_integral(coef, lo_s, hi_s, q)
        return total

    def side_tail(self, side, eps):
        return self._integral(side, eps, 1.0, 0)

    def side_moment(self, side, eps, k):
        return self._integral(side, 0.0, eps, k)

    def params(self):
        return {"n_nodes": len(self.x), "x_min": float(self.x[0]), "x_max": float(self.x[-1])}


class GammaSubordinator:
    """Gamma subordinator: Levy density a s^-1 e^(-b s), optional linear drift."""

    def __init__(self, a, b, drift=0.0):
        self.a, self.b, self.drift = float(a), float(b), float(drift)
        if self.a <= 0 or self.b <= 0 or self.drift < 0:
            raise DomainError("need a > 0, b > 0, drift >= 0")

    def levy_density(self, s):
        s = np.asarray(s, dtype=float)
        return self.a / s * np.exp(-self.b * s)

    def laplace_exponent(self, u):
        u = np.asarray(u, dtype=float)
        return self.drift * u + self.a * np.log1p(u / self.b)

    def params(self):
        return {"kind": "gamma", "a": self.a, "b": self.b, "drift": self.drift}


class StableSubordinator:
    """beta-stable subordinator: Levy density c s^(-1-beta), 0 < beta < 1."""

    def __init__(self, beta, c=1.0, drift=0.0):
        self.beta, self.c, self.drift = float(beta), float(c), float(drift)
        if not 0 < self.beta < 1 or self.c <= 0 or self.drift < 0:
            raise DomainError("need 0 < beta < 1, c > 0, drift >= 0")

    def levy_density(self, s):
        s = np.asarray(s, dtype=float)
        return self.c * s ** (-1.0 - self.beta)

    def laplace_exponent(self, u):
        u = np.asarray(u, dtype=float)
        k = self.c * special.gamma(1 - self.beta) / self.beta
        return self.drift * u + k * u**self.beta

    def params(self):
        return {"kind": "stable", "beta": self.beta, "c": self.c, "drift": self.drift}


def _subordinated_density(x, subordinator, sigma):
    """int_0^inf N(x; 0, sigma^2 s) Pi_A(ds) by quadrature in log s."""

    def f(w):
        s = math.exp(w)
        var = sigma * sigma * s
        gauss = math.exp(-x * x / (2 * var)) / math.sqrt(2 * math.pi * var)
        return gauss * float(subordinator.levy_density(s)) * s

    # below peak - log(1600) the Gaussian factor is under e^-800; above
    # peak + 80 the integrand has decayed by at least e^-40
    peak = math.log(x * x / (sigma * sigma))
    opts = dict(epsabs=0.0, epsrel=1e-11, limit=400)
    left, _ = integrate.quad(f, peak - math.log(1600.0), peak, **opts)
    right, _ = integrate.quad(f, peak, peak + 80.0, **opts)
    return left + right


class SubordinatedBM(Tabulated):
    """Jump measure of sigma * B(A_t), tabulated from the subordinator.

    The subordinator's linear drift contributes the Gaussian variance
    sigma^2 * drift, which belongs in the model's ``sigma2`` and not here.
    """

    name = "subordinated_bm"

    def __init__(self, subordinator, sigma=1.0, x_min=1e-10, per_decade=40):
        if sigma <= 0:
            raise DomainError("sigma must be positive")
        self.subordinator = subordinator
        self.sigma = float(sigma)
        n = int(round(-math.log10(x_min) * per_decade)) + 1
        nodes = np.logspace(math.log10(x_min), 0.0, n)
        dens = np.array([_subordinated_density(v, subordinator, self.sigma) for v in nodes])
        super().__init__(nodes, dens, dens)
        self.symmetric = True

    def gaussian_variance(self):
        return self.sigma**2 * self.subordinator.drift

    def params(self):
        return {"sigma": self.sigma, **self.subordinator.params()}
