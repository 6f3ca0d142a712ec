"""Norming functions b_lam(t) = F^{-1}(log|log t| / (lam t)).

F^{-1} comes either from a tabulated rate (log-log interpolation, exact on
power laws) or from the closed forms of the standard families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import DomainError, UnknownFamily

T_MAX = math.exp(-math.e)


def loglog(t):
    return math.log(abs(math.log(t)))


def invert_rate(table, y):
    """eps with F(eps) = y; OutOfTableRange outside [min F, max F]."""
    return table.invert(y)


def _check_t(t, t_max):
    if not 0 < t <= t_max * (1 + 1e-15):
        raise DomainError(f"t must lie in (0, {t_max:g}], got {t!r}")


# --- closed forms -----------------------------------------------------------


def _brownian(t, sigma=1.0):
    return sigma * math.pi * math.sqrt(t / (8.0 * loglog(t)))


def _stable(t, alpha, c_alpha=1.0):
    return (c_alpha * t / loglog(t)) ** (1.0 / alpha)


def _log_corrected(t, alpha, gamma_exp):
    lt = abs(math.log(t))
    if alpha == 2:
        if not gamma_exp > 1:
            raise DomainError("alpha = 2 needs gamma_exp > 1")
        return math.sqrt(t * lt ** (1.0 - gamma_exp) / loglog(t))
    if not 0 < alpha < 2:
        raise DomainError("alpha must lie in (0, 2]")
    return (t * lt ** (-gamma_exp) / loglog(t)) ** (1.0 / alpha)


def _polynomial(t, alpha1):
    return (t / loglog(t)) ** (1.0 / alpha1)


def _variance_gamma(t, lam):
    return math.exp(-lam * loglog(t) / t)


def _drift_dominated(t, c):
    return abs(c) * t


def subordinated_rate(eps, laplace_exponent, sigma=1.0, drift=0.0):
    """F(eps) = Phi(sigma^2 / eps^2) + gamma_A sigma^2 / eps^2."""
    v = sigma * sigma / (eps * eps)
    return laplace_exponent(v) + drift * v


def _subordinated_bm(t, laplace_exponent, sigma=1.0, drift=0.0, lam=1.0):
    y = loglog(t) / (lam * t)

    def g(log_eps):
        return math.log(subordinated_rate(math.exp(log_eps), laplace_exponent, sigma, drift)) - math.log(y)

    lo, hi = -1.0, 0.0
    while g(lo) < 0:
        lo *= 2.0
        if lo < -700:
            raise DomainError("F^{-1} below double range")
    while g(hi) > 0:
        hi += 1.0
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-15))


CLOSED_FORMS: dict[str, Callable] = {
    "brownian": _brownian,
    "stable": _stable,
    "log_corrected": _log_corrected,
    "polynomial": _polynomial,
    "variance_gamma": _variance_gamma,
    "drift_dominated": _drift_dominated,
    "subordinated_bm": _subordinated_bm,
}


def closed_form_norming(family, params, t):
    try:
        fn = CLOSED_FORMS[family]
    except KeyError:
        raise UnknownFamily(family) from None
    if family == "variance_gamma" and "lam" not in params:
        raise DomainError("variance_gamma norming needs an explicit lam")
    _check_t(t, T_MAX)
    return fn(t, **params)


# --- the evaluator ----------------------------------------------------------


@dataclass(frozen=True)
class NormingFunction:
    """b_lam on (0, t_max], from a rate table or a closed form."""

    source: str
    lam: float = 1.0
    t_max: float = T_MAX
    table: object = None
    family: str | None = None
    params: dict = field(default_factory=dict)
    extrapolate: bool = False

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("lam must be positive")
        if not 0 < self.t_max <= T_MAX * (1 + 1e-15):
            raise DomainError("t_max must lie in (0, e^-e]")

    @classmethod
    def from_table(cls, table, lam=1.0, t_max=T_MAX, extrapolate=False):
        return cls("table", lam, t_max, table=table, extrapolate=extrapolate)

    @classmethod
    def closed_form(cls, family, params=None, lam=1.0, t_max=T_MAX):
        """Closed-form norming; ``lam`` is ignored except for variance_gamma."""
        if family not in CLOSED_FORMS:
            raise UnknownFamily(family)
        params = dict(params or {})
        if family == "variance_gamma":
            params.setdefault("lam", lam)
        return cls("closed_form", lam, t_max, family=family, params=params)

    def __call__(self, t):
        return norming_b(self, t)

    def curve(self, t_grid):
        return np.array([self(float(t)) for t in t_grid])


def norming_b(nf, t):
    _check_t(t, nf.t_max)
    if nf.source == "closed_form":
        return CLOSED_FORMS[nf.family](t, **nf.params)
    y = loglog(t) / (nf.lam * t)
    if nf.extrapolate:
        return math.exp(nf.table.log_invert(math.log(y)))
    return invert_rate(nf.table, y)


def check_b_regularity(nf, t_grid, floor=1e-3):
    """C_hat = min over the grid of b(t/2) / b(t)."""
    ratios = []
    for t in t_grid:
        t = float(t)
        b = norming_b(nf, t)
        half = norming_b(nf, t / 2.0)
        ratios.append(half / b if b > 0 else math.nan)
    c_hat = float(np.min(ratios))
    return {"C_hat": c_hat, "ratios": np.array(ratios), "pass": bool(c_hat >= floor)}


def stable_constant_bounds(alpha, C):
    """Bracket (low, high) for the stable small-deviation constant c_alpha."""
    if not 0 < alpha < 2:
        raise DomainError("alpha must lie strictly between 0 and 2")
    if not C > 0:
        raise DomainError("C must be positive")
    low = 2.0 * C / 2.0**alpha * (1.0 / alpha + 1.0 / (12.0 * (2.0 - alpha)))
    high = 3.0**alpha * 2.0 * C * (1.0 / alpha + 10.0 / (2.0 - alpha))
    return low, high


def small_alpha_equivalent(alpha, C):
    """2 C / alpha, the common leading term of both bounds as alpha -> 0."""
    return 2.0 * C / alpha
