"""Truncated variance, the Esscher tilt u_eps and the small-deviation rate F.

F is computed pointwise from the triplet.  Symmetric models use
F(eps) = U(eps) / eps^2.  Otherwise the tilt u_eps solves Lambda'_eps(u) = 0 and

    F(eps) = Pibar(eps) + (sigma^2 + int x^2 e^(-u x) Pi) / eps^2 - Lambda_eps(u_eps).

Bounded-variation models with nonzero effective drift have no root; they are
reported as drift dominated and normed linearly instead.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import (
    DegenerateModel,
    DomainError,
    DriftDominated,
    InsufficientGrid,
    NoConvergence,
    NotMonotone,
    NotSymmetric,
    OutOfTableRange,
    UnderflowRange,
)
from .levy_model import (
    EXP_GUARD,
    effective_drift,
    exp_compensated_integral,
    exp_second_moment,
    is_bounded_variation,
    is_symmetric,
    outer_first_moment,
    tail_mass,
    tilted_first_moment,
    tilted_second_moment,
    truncated_moment,
)
from .measures import SIDES

ROOT = "root"
DRIFT_DOMINATED = "drift_dominated"
MAX_DOUBLINGS = 200
DRIFT_TOL = 1e-9
DEFAULT_TOL_ROOT = 1e-9


def _check_eps(eps):
    if not 0 < eps <= 1:
        raise DomainError(f"eps must lie in (0, 1], got {eps!r}")


def truncated_variance(model, eps):
    """U(eps) = eps^2 Pibar(eps) + int_{-eps}^{eps} x^2 Pi(dx) + sigma^2."""
    _check_eps(eps)
    # summed in this order so the sum rule holds bit for bit
    u = eps**2 * tail_mass(model, eps) + truncated_moment(model, eps, 2) + model.sigma2
    if not u > 0:
        raise DegenerateModel("U(eps) vanishes: no Gaussian part and no jumps")
    return u


def compensated_drift(model, eps):
    """gamma - int over eps < |x| <= 1 of x Pi(dx), the linear coefficient of Lambda_eps."""
    return model.gamma - outer_first_moment(model, eps)


def lambda_eps(model, eps, u):
    _check_eps(eps)
    jumps = exp_compensated_integral(model, eps, u)
    return 0.5 * model.sigma2 * u * u + compensated_drift(model, eps) * u + jumps


def lambda_eps_prime(model, eps, u):
    _check_eps(eps)
    return model.sigma2 * u + compensated_drift(model, eps) + tilted_first_moment(model, eps, u)


def lambda_eps_second(model, eps, u):
    _check_eps(eps)
    return model.sigma2 + exp_second_moment(model, eps, u)


@dataclass(frozen=True)
class EsscherSolution:
    u_eps: float
    lambda_at_root: float
    converged: bool
    regime: str
    eps: float = math.nan
    drift: float = math.nan

    def summary(self) -> dict:
        return {
            "eps": self.eps,
            "u_eps": self.u_eps,
            "lambda_at_root": self.lambda_at_root,
            "converged": self.converged,
            "regime": self.regime,
        }


def _drift_dominated(model):
    """Effective drift if the model has bounded variation and c != 0, else None."""
    if not is_bounded_variation(model):
        return None
    c = effective_drift(model)
    return c if abs(c) > DRIFT_TOL else None


def solve_esscher_drift(model, eps, tol_root=DEFAULT_TOL_ROOT):
    """Root u_eps of Lambda'_eps, or a drift-dominated verdict.

    The bracket starts at [-1, 1] and doubles towards the side where the root
    must lie (Lambda'_eps is nondecreasing).  Brent's method refines it and a
    final Newton step uses the analytic second derivative.
    """
    _check_eps(eps)
    if not tol_root > 0:
        raise DomainError("tol_root must be positive")
    model.check_nondegenerate()
    if is_symmetric(model):
        return EsscherSolution(0.0, 0.0, True, ROOT, eps)

    def d1(u):
        return lambda_eps_prime(model, eps, u)

    g0 = d1(0.0)
    if g0 == 0:
        return EsscherSolution(0.0, 0.0, True, ROOT, eps)
    direction = -1.0 if g0 > 0 else 1.0
    near, far = 0.0, direction
    g_far = None
    for _ in range(MAX_DOUBLINGS):
        if abs(far) * eps > EXP_GUARD:
            break
        g_far = d1(far)
        if g_far * g0 <= 0:
            break
        near, far = far, 2.0 * far
        g_far = None
    else:
        far = math.nan

    if g_far is None or g_far * g0 > 0:
        c = _drift_dominated(model)
        if c is not None:
            return EsscherSolution(math.nan, math.nan, False, DRIFT_DOMINATED, eps, c)
        raise NoConvergence(
            f"Lambda'_eps has no sign change for |u| * eps <= {EXP_GUARD:g} at eps={eps:g}"
        )

    lo, hi = sorted((near, far))
    if g_far == 0:
        u = far
    else:
        u = optimize.brentq(d1, lo, hi, xtol=1e-14 * max(1.0, abs(far)), rtol=1e-15, maxiter=500)
    g = d1(u)
    curv = lambda_eps_second(model, eps, u)
    if curv > 0 and g != 0:
        polished = u - g / curv
        if lo <= polished <= hi:
            g_new = d1(polished)
            if abs(g_new) < abs(g):
                u, g = polished, g_new
    converged = abs(g) <= tol_root * (1.0 + abs(u))
    return EsscherSolution(u, lambda_eps(model, eps, u), converged, ROOT, eps)


def rate_symmetric(model, eps):
    """F(eps) = U(eps) / eps^2 for a symmetric model."""
    if not is_symmetric(model):
        raise NotSymmetric("model has nonzero drift or an asymmetric jump measure")
    return truncated_variance(model, eps) / (eps * eps)


def rate_and_tilt(model, eps, tol_root=DEFAULT_TOL_ROOT):
    """(F(eps), u_eps); raises DriftDominated when there is no root."""
    _check_eps(eps)
    if is_symmetric(model):
        return rate_symmetric(model, eps), 0.0
    sol = solve_esscher_drift(model, eps, tol_root)
    if sol.regime == DRIFT_DOMINATED:
        raise DriftDominated(sol.drift, eps)
    u = sol.u_eps
    second = model.sigma2 + tilted_second_moment(model, eps, u)
    f = tail_mass(model, eps) + second / (eps * eps) - sol.lambda_at_root
    return f, u


def rate_general(model, eps, tol_root=DEFAULT_TOL_ROOT):
    return rate_and_tilt(model, eps, tol_root)[0]


def sd_bounds(model, t, eps):
    """Two-sided bracket (lower, upper) for -log P(||X||_t <= eps)."""
    if not 0 < eps < 0.5:
        raise DomainError("sd_bounds needs 0 < eps < 1/2")
    if not t > 0:
        raise DomainError("t must be positive")
    f_lo, u_lo = rate_and_tilt(model, 2.0 * eps)
    f_hi, u_hi = rate_and_tilt(model, eps / 3.0)
    lower = t * f_lo / 12.0 - eps * abs(u_lo) - 1.0
    upper = 10.0 * t * f_hi + eps * abs(u_hi) + 3.0
    return lower, upper


# --- tables -----------------------------------------------------------------


@dataclass(frozen=True)
class RateTable:
    """F sampled on a decreasing eps grid; F strictly increases along the grid."""

    eps_grid: np.ndarray
    f_values: np.ndarray
    kind: str = "general"
    eps0: float = math.nan
    u_values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        eps = np.asarray(self.eps_grid, dtype=float)
        f = np.asarray(self.f_values, dtype=float)
        if eps.ndim != 1 or eps.shape != f.shape or eps.size < 2:
            raise DomainError("eps_grid and f_values must be 1-d arrays of equal length >= 2")
        if not np.all(np.diff(eps) < 0) or eps[-1] <= 0:
            raise DomainError("eps_grid must be positive and strictly decreasing")
        if not np.all(np.isfinite(f)) or not np.all(f > 0):
            raise NotMonotone("rate table contains non-finite or nonpositive values")
        bad = np.nonzero(np.diff(f) <= 0)[0]
        if bad.size:
            i = int(bad[0])
            raise NotMonotone(
                f"F not strictly increasing as eps decreases: "
                f"F({eps[i]:.6g})={f[i]:.10g} >= F({eps[i + 1]:.6g})={f[i + 1]:.10g}"
            )
        object.__setattr__(self, "eps_grid", eps)
        object.__setattr__(self, "f_values", f)
        if math.isnan(self.eps0):
            object.__setattr__(self, "eps0", float(eps[0]))

    @classmethod
    def from_function(cls, func, eps_grid, name="closed_form"):
        eps = np.asarray(eps_grid, dtype=float)
        return cls(eps, np.array([func(e) for e in eps]), f"closed_form:{name}")

    @property
    def f_range(self):
        return float(self.f_values[0]), float(self.f_values[-1])

    def __len__(self):
        return self.eps_grid.size

    def invert(self, y):
        """eps with F(eps) = y by log-log interpolation."""
        lo, hi = self.f_range
        if not lo <= y <= hi:
            raise OutOfTableRange(y, lo, hi)
        return float(np.exp(np.interp(math.log(y), np.log(self.f_values), np.log(self.eps_grid))))

    def log_invert(self, log_y):
        """log F^{-1}(e^log_y), extrapolating the end segments as power laws."""
        lf = np.log(self.f_values)
        le = np.log(self.eps_grid)
        if log_y > lf[-1]:
            slope = (le[-1] - le[-2]) / (lf[-1] - lf[-2])
            return float(le[-1] + slope * (log_y - lf[-1]))
        if log_y < lf[0]:
            slope = (le[1] - le[0]) / (lf[1] - lf[0])
            return float(le[0] + slope * (log_y - lf[0]))
        return float(np.interp(log_y, lf, le))

    def rows(self):
        return list(zip(self.eps_grid.tolist(), self.f_values.tolist()))


def default_grid(eps_min=1e-5, eps_max=0.5, n_points=120):
    if not 0 < eps_min < eps_max <= 1:
        raise DomainError("need 0 < eps_min < eps_max <= 1")
    if n_points < 2:
        raise DomainError("n_points must be at least 2")
    return np.geomspace(eps_max, eps_min, n_points)


def _point(args):
    model, eps = args
    return rate_and_tilt(model, float(eps))


def build_rate_table(model, eps_min=1e-5, eps_max=0.5, n_points=120, n_jobs=1, eps_grid=None):
    """Tabulate F on a log-spaced decreasing grid.

    Grid points are independent, so ``n_jobs > 1`` evaluates them in worker
    processes; results are gathered in grid order and match the serial run.
    """
    model.check_nondegenerate()
    grid = default_grid(eps_min, eps_max, n_points) if eps_grid is None else np.asarray(eps_grid, float)
    if not is_symmetric(model):
        c = _drift_dominated(model)
        if c is not None:
            # probe once: a root can still exist when drift and jumps oppose
            sol = solve_esscher_drift(model, float(grid[-1]))
            if sol.regime == DRIFT_DOMINATED:
                raise DriftDominated(c)
    work = [(model, e) for e in grid]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            out = list(pool.map(_point, work, chunksize=max(1, len(work) // (4 * n_jobs))))
    else:
        out = [_point(w) for w in work]
    f = np.array([o[0] for o in out])
    u = np.array([o[1] for o in out])
    kind = "symmetric" if is_symmetric(model) else "general"
    return RateTable(grid, f, kind, float(grid[0]), u)


# --- side conditions --------------------------------------------------------


def _trend(values):
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    if np.all(d <= 1e-12 * np.maximum(1.0, np.abs(v[:-1]))):
        return "decreasing"
    if v[-1] > v[0] and np.all(d >= 0):
        return "increasing"
    return "bounded"


def check_esscher_negligible(model, eps_grid):
    """Ratios eps |u_eps| / log log F(eps) along a grid sorted to decreasing eps."""
    grid = np.sort(np.asarray(eps_grid, dtype=float))[::-1]
    ratios = []
    for eps in grid:
        f, u = rate_and_tilt(model, float(eps))
        if not f > math.e:
            raise DomainError(f"F({eps:g}) = {f:g} does not exceed e")
        ratios.append(eps * abs(u) / math.log(math.log(f)))
    ratios = np.array(ratios)
    return {"eps": grid, "ratio": ratios, "verdict": _trend(ratios)}


def _log_abs_compensator(model, log_b):
    """log | int_{b < |x| <= 1} x Pi(dx) - gamma | for b = e^log_b, or None."""
    if is_symmetric(model):
        return -math.inf
    measure = model.measure
    floor = math.log(1e-290)
    if log_b >= floor:
        v = outer_first_moment(model, min(1.0, math.exp(log_b))) - model.gamma
        return math.log(abs(v)) if v != 0 else -math.inf
    # below double range: keep the finite part and add the power-law piece
    x0 = 1e-290
    finite = outer_first_moment(model, x0) - model.gamma
    growth = []
    for s in SIDES:
        if not measure.has_side(s):
            continue
        region = measure.power_region(s)
        if region is None or region[2] < x0:
            if measure.bounded_variation():
                continue  # remaining piece is below x0 * Pibar, negligible
            return None
        coef, p, _ = region
        q = p + 2.0  # int_b^x0 x * coef x^p dx = coef (x0^q - b^q) / q
        if q > 0:
            continue  # piece is at most coef x0^q / q, negligible
        if q == 0:
            growth.append((s, math.log(coef * (math.log(x0) - log_b))))
        else:
            growth.append((s, math.log(coef / -q) + q * log_b))
    if not growth:
        return math.log(abs(finite)) if finite != 0 else -math.inf
    # the divergent pieces dominate; opposite sides may cancel
    top = max(g for _, g in growth)
    net = sum(s * math.exp(g - top) for s, g in growth)
    if abs(net) < 1e-12:
        return None
    return top + math.log(abs(net))


def check_condition_M(model, rate_table, beta_grid=(1.5, 2.0), n_max=40, n_min=3, lam=1.0):
    """log r(n, beta) with a_n = n^(-n^beta) and b = b_lam(a_n), all in log space.

    r(n, beta) = a_{n+1} | int_{|x| > b} x Pi(dx) - gamma | / b.
    """
    if n_max > 60:
        raise DomainError("n_max must not exceed 60")
    if not lam > 0:
        raise DomainError("lam must be positive")
    rows = {}
    verdicts = {}
    for beta in beta_grid:
        if not 1 < beta <= 3:
            raise DomainError("beta must lie in (1, 3]")
        ns, logs = [], []
        for n in range(max(2, n_min), n_max + 1):
            abs_log_a = n**beta * math.log(n)
            log_a_next = -((n + 1) ** beta) * math.log(n + 1)
            log_y = math.log(math.log(abs_log_a)) - math.log(lam) + abs_log_a
            log_b = rate_table.log_invert(log_y)
            comp = _log_abs_compensator(model, log_b)
            if comp is None:
                continue
            ns.append(n)
            logs.append(log_a_next + comp - log_b)
        if len(ns) < 5:
            raise UnderflowRange(f"only {len(ns)} usable n values for beta={beta:g}")
        logs = np.array(logs)
        rows[beta] = (np.array(ns), logs)
        verdicts[beta] = _tends_to_minus_inf(logs)
    return {"rows": rows, "verdicts": verdicts, "pass": all(verdicts.values())}


def _tends_to_minus_inf(logs):
    """Strictly decreasing over the second half, with steps that do not shrink.

    A sequence settling at a finite limit has decrements tending to zero, so
    the later steps would be much smaller than the earlier ones.
    """
    if np.all(np.isneginf(logs)):
        return True
    if not np.all(np.isfinite(logs)):
        return False
    half = len(logs) // 2
    steps = -np.diff(logs)
    head, tail = steps[:half], steps[half:]
    return bool(np.all(tail > 0) and tail.mean() >= 0.5 * head.mean())


def check_flargeru(model, rate_table, c_const=None):
    """max over the table of (U(eps) / eps^2) / (F(eps) + 1)."""
    ratios = np.array(
        [
            truncated_variance(model, float(e)) / (e * e) / (f + 1.0)
            for e, f in zip(rate_table.eps_grid, rate_table.f_values)
        ]
    )
    worst = float(ratios.max())
    verdict = None if c_const is None else worst <= c_const
    return {"eps": rate_table.eps_grid, "ratio": ratios, "max_ratio": worst, "pass": verdict}


def estimate_rv_exponent(rate_table):
    """Least-squares slope of log F against log eps over the smallest decade."""
    eps = rate_table.eps_grid
    if eps.size < 10 or eps[0] / eps[-1] < 10**3 * (1 - 1e-12):
        raise InsufficientGrid("need at least 10 points spanning 3 decades")
    mask = eps <= 10.0 * eps[-1] * (1 + 1e-12)
    if mask.sum() < 3:
        raise InsufficientGrid("fewer than 3 points in the smallest decade")
    slope = np.polyfit(np.log(eps[mask]), np.log(rate_table.f_values[mask]), 1)[0]
    return float(slope)
