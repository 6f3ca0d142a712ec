"""Monte Carlo checks of the small-deviation bracket and the pathwise LIL."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NoEstimableCells, NotDriftDominated, ZeroHits
from .levy_model import effective_drift, is_bounded_variation
from .rate_function import sd_bounds
from .simulate import (
    PathConfig,
    estimate_small_dev,
    geometric_grid,
    running_sup_on_grid,
    simulate_paths,
)
from .streams import as_stream

P_MIN = 1e-4
P_MAX = 1.0 - 1e-4


def brownian_ball_probability(t, eps, sigma=1.0, terms=60):
    """P(sup_{s <= t} |sigma B_s| < eps).

    Uses the eigenfunction series for large t / eps^2 and the image series
    otherwise; both converge fast in their own regime.
    """
    if not (t > 0 and eps > 0 and sigma > 0):
        raise DomainError("t, eps and sigma must be positive")
    tau = sigma * sigma * t / (eps * eps)
    if tau >= 0.5:
        k = np.arange(terms)
        odd = 2 * k + 1
        return float(4.0 / math.pi * np.sum((-1.0) ** k / odd * np.exp(-(odd**2) * math.pi**2 * tau / 8.0)))
    x = 1.0 / math.sqrt(tau)
    k = np.arange(1, terms)
    # 1 - P = 2 sum_{k>=1} (-1)^(k+1) erfc((2k - 1) x / sqrt 2)
    return float(1.0 - 2.0 * np.sum((-1.0) ** (k + 1) * special.erfc((2 * k - 1) * x / math.sqrt(2.0))))


# --- sandwich ---------------------------------------------------------------


@dataclass(frozen=True)
class SandwichRow:
    t: float
    eps: float
    lower: float
    upper: float
    neg_log_p: float
    band_low: float
    band_high: float
    status: str  # "pass", "fail" or "skipped"
    hits: int = 0
    n_paths: int = 0


@dataclass(frozen=True)
class SandwichReport:
    rows: tuple

    @property
    def checked(self):
        return [r for r in self.rows if r.status != "skipped"]

    @property
    def passed(self):
        return all(r.status == "pass" for r in self.checked)


def sandwich_check(model, t_grid, eps_grid, n_paths, config=None, rng=None, delta_rule=None, n_jobs=1):
    """Compare the Monte Carlo band for -log P(||X||_t <= eps) with sd_bounds.

    Cells whose lower bound already forces p < 1e-4 are skipped without
    simulation; cells whose estimate falls outside [1e-4, 1 - 1e-4] are skipped
    after it.  A checked cell passes when its band lies inside
    [lower - h, upper + h], h being the band half-width.
    ``delta_rule(eps)`` may choose the small-jump cutoff per cell.
    """
    config = config or PathConfig()
    stream = as_stream(config.seed if rng is None else rng)
    rows = []
    cell = 0
    for t in t_grid:
        for eps in eps_grid:
            t, eps = float(t), float(eps)
            lower, upper = sd_bounds(model, t, eps)
            key = cell
            cell += 1
            if lower > -math.log(P_MIN):
                rows.append(SandwichRow(t, eps, lower, upper, math.nan, math.nan, math.nan, "skipped"))
                continue
            cfg = config if delta_rule is None else config.with_(delta=delta_rule(eps))
            try:
                est = estimate_small_dev(model, t, eps, n_paths, cfg, stream.child(key), n_jobs)
            except ZeroHits as exc:
                est = exc.estimate
            if not P_MIN <= est.p_hat <= P_MAX:
                rows.append(
                    SandwichRow(t, eps, lower, upper, est.neg_log_p, math.nan, math.nan, "skipped",
                                est.hits, est.n_paths)
                )
                continue
            b_lo, b_hi = est.neg_log_band()
            h = 0.5 * (b_hi - b_lo)
            ok = lower - h <= b_lo and b_hi <= upper + h
            rows.append(
                SandwichRow(t, eps, lower, upper, est.neg_log_p, b_lo, b_hi, "pass" if ok else "fail",
                            est.hits, est.n_paths)
            )
    report = SandwichReport(tuple(rows))
    if not report.checked:
        raise NoEstimableCells("no (t, eps) cell has an estimable probability")
    return report


# --- LIL ----------------------------------------------------------------------


@dataclass(frozen=True)
class LiminfReport:
    times: np.ndarray  # t_k = r^k, in the order of ks
    ks: np.ndarray
    ratios: np.ndarray  # (n_paths, len(ks))
    minima: np.ndarray
    median: float
    iqr: tuple

    def summary(self) -> dict:
        return {
            "n_paths": int(self.ratios.shape[0]),
            "k_min": int(self.ks.min()),
            "k_max": int(self.ks.max()),
            "median_of_minima": self.median,
            "iqr_low": self.iqr[0],
            "iqr_high": self.iqr[1],
        }


def path_sups(model, r, k_range, n_paths, config=None, rng=None, substeps=256, exact_sup=True):
    """||X||_{r^k} for k in k_range, all read off one simulated path per row."""
    k_min, k_max = int(min(k_range)), int(max(k_range))
    config = config or PathConfig()
    grid, marks = geometric_grid(r, k_min, k_max, substeps)
    running = running_sup_on_grid(model, grid, n_paths, config, rng, exact_sup)
    ks = np.arange(k_min, k_max + 1)
    return ks, r**ks.astype(float), running[:, marks]


def lil_liminf_estimate(model, nf, r, k_range, n_paths, config=None, rng=None, substeps=256, sups=None):
    """Per-path minima over k of ||X||_{t_k} / b(t_k) with t_k = r^k.

    ``nf`` is any callable t -> b(t).  Each replicate is a single trajectory
    read at all t_k.  Precomputed ``sups`` from path_sups may be passed to
    compare several normings on the same paths.
    """
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    if sups is None:
        sups = path_sups(model, r, k_range, n_paths, config, rng, substeps)
    ks, times, values = sups
    b = np.array([nf(float(t)) for t in times])
    if not np.all(b > 0):
        raise DomainError("norming must be positive on the grid")
    ratios = values / b[None, :]
    minima = ratios.min(axis=1)
    q1, med, q3 = np.percentile(minima, [25, 50, 75])
    return LiminfReport(times, ks, ratios, minima, float(med), (float(q1), float(q3)))


def bv_drift_limit_check(model, t_list, n_paths, config=None, rng=None):
    """Mean, median and max of | ||X||_t / t - |c| | per t for a drift-dominated model.

    The mean carries rare order-one jumps divided by t and does not shrink in
    expectation; the trend verdict uses the median.
    """
    if not is_bounded_variation(model):
        raise NotDriftDominated("model does not have bounded variation")
    c = effective_drift(model)
    if abs(c) <= 1e-9:
        raise NotDriftDominated("effective drift vanishes")
    config = config or PathConfig(small_jump_mode="drop", delta=1e-6, n_steps=64, refine_levels=0)
    stream = as_stream(config.seed if rng is None else rng)
    rows = []
    for i, t in enumerate(t_list):
        cfg = config.with_(horizon=float(t))
        _, values = simulate_paths(model, cfg, n_paths, stream.child(i))
        sup = np.abs(values).max(axis=1)
        err = np.abs(sup / t - abs(c))
        rows.append({
            "t": float(t),
            "mean_abs_error": float(err.mean()),
            "median_abs_error": float(np.median(err)),
            "max_abs_error": float(err.max()),
        })
    errors = [row["median_abs_error"] for row in rows]
    trend = bool(np.all(np.diff(errors) <= 0)) if len(errors) > 1 else True
    return {"drift": c, "rows": rows, "decreasing": trend}

