import math

import numpy as np
import pytest
from scipy import stats

from levy_lil import (
    LevyModel,
    PathConfig,
    catalog,
    estimate_small_dev,
    simulate_path,
    simulate_variance_gamma,
    sup_norm_refined,
)
from levy_lil.errors import ApproximationUnsound, DomainError, ZeroHits
from levy_lil.levy_model import truncated_moment
from levy_lil.simulate import (
    bridge_stay_probability,
    geometric_grid,
    grid_sup_norms,
    running_sup_on_grid,
    sample_bridge_abs_sup,
    simulate_paths,
    wilson_interval,
)
from levy_lil.verify import brownian_ball_probability

BROWNIAN = LevyModel(0.0, 1.0)
THETA_1 = 0.37078  # P(sup_{s <= 1} |B_s| <= 1), theta series


# --- moments of X_1 ---------------------------------------------------------


MOMENT_CASES = [
    ("brownian", PathConfig(n_steps=16)),
    ("brownian_drift", PathConfig(n_steps=16)),
    ("symmetric_polynomial", PathConfig(n_steps=16, delta=0.1)),
    ("one_sided_15", PathConfig(n_steps=16, delta=0.05)),
    ("brownian_jumps", PathConfig(n_steps=16, delta=0.05)),
    ("log_polynomial", PathConfig(n_steps=16, delta=0.05)),
    ("variance_gamma_drift", PathConfig(n_steps=16, delta=1e-3, small_jump_mode="drop")),
    ("drift_dominated", PathConfig(n_steps=16, delta=1e-4, small_jump_mode="drop")),
]


@pytest.mark.parametrize("name,config", MOMENT_CASES, ids=[c[0] for c in MOMENT_CASES])
def test_mean_and_variance_of_x1(name, config):
    model = catalog.get(name)
    n = 100_000
    _, values = simulate_paths(model, config, n, rng=123)
    x = values[:, -1]
    m = x.mean()
    v = x.var(ddof=1)
    assert abs(m - model.gamma) <= 3 * math.sqrt(v / n)
    want_var = model.sigma2 + (truncated_moment(model, 1.0, 2) if model.has_jumps else 0.0)
    if config.small_jump_mode == "drop":
        want_var -= truncated_moment(model, config.delta, 2)
    mu4 = np.mean((x - m) ** 4)
    assert abs(v - want_var) <= 3 * math.sqrt((mu4 - v * v) / n)


def test_brownian_increments():
    _, values = simulate_paths(BROWNIAN, PathConfig(n_steps=16), 20_000, rng=4)
    inc = np.diff(values, axis=1).ravel()
    assert stats.kstest(inc, stats.norm(scale=math.sqrt(1 / 16)).cdf).pvalue > 1e-3


# --- determinism ------------------------------------------------------------


def test_seed_reproducibility():
    cfg = PathConfig(n_steps=64, delta=0.05, seed=9)
    model = catalog.get("brownian_jumps")
    a, b = simulate_path(model, cfg), simulate_path(model, cfg)
    assert np.array_equal(a.values, b.values) and a.sup_norm == b.sup_norm
    c = simulate_path(model, cfg.with_(seed=10))
    assert not np.array_equal(a.values, c.values)


def test_paths_do_not_depend_on_batch_size():
    model = catalog.get("brownian_jumps")
    cfg = PathConfig(n_steps=32, delta=0.05)
    _, small = simulate_paths(model, cfg, 100, rng=1)
    _, large = simulate_paths(model, cfg, 700, rng=1)
    assert np.array_equal(small, large[:100])


def test_parallel_estimate_matches_serial():
    cfg = PathConfig(n_steps=32, delta=0.05, seed=3)
    model = catalog.get("brownian_jumps")
    a = estimate_small_dev(model, 0.5, 0.5, 3000, cfg)
    b = estimate_small_dev(model, 0.5, 0.5, 3000, cfg, n_jobs=2)
    assert a == b


# --- refinement -------------------------------------------------------------


def test_grid_sup_norms_match_paths():
    cfg = PathConfig(n_steps=32, delta=0.05)
    model = catalog.get("brownian_jumps")
    _, values = simulate_paths(model, cfg, 300, rng=8, refine_levels=1)
    sups = grid_sup_norms(model, cfg, 300, rng=8, refine_levels=1)
    assert np.array_equal(sups, np.max(np.abs(values), axis=1))


def test_refined_level_zero_is_path_sup():
    cfg = PathConfig(n_steps=64, delta=0.05, seed=2)
    model = catalog.get("brownian_jumps")
    assert sup_norm_refined(model, cfg, refine_levels=0) == simulate_path(model, cfg).sup_norm


@pytest.mark.parametrize("seed", range(6))
def test_refined_sup_monotone(seed):
    cfg = PathConfig(n_steps=32, delta=0.05, seed=seed)
    model = catalog.get("brownian_jumps")
    sups = [sup_norm_refined(model, cfg, refine_levels=k) for k in range(5)]
    assert all(b >= a for a, b in zip(sups, sups[1:]))


def test_refined_grid_contains_coarse():
    cfg = PathConfig(n_steps=16, delta=0.05)
    model = catalog.get("symmetric_polynomial")
    _, coarse = simulate_paths(model, cfg, 10, rng=5)
    _, fine = simulate_paths(model, cfg, 10, rng=5, refine_levels=3)
    assert np.array_equal(fine[:, ::8], coarse)


def test_theta_value_at_level_four():
    # grid sup on 1024 * 16 steps; the grid bias is about 0.004
    sups = grid_sup_norms(BROWNIAN, PathConfig(n_steps=1024), 40_000, rng=77, refine_levels=4)
    p = np.mean(sups <= 1.0)
    assert abs(p - THETA_1) <= 0.01


# --- small-deviation estimates ----------------------------------------------


def test_estimate_certain_event():
    est = estimate_small_dev(BROWNIAN, 1.0, 100.0, 500, PathConfig(n_steps=16))
    assert est.p_hat == 1.0 and est.neg_log_p == 0.0 and est.hits == 500


def test_estimate_zero_hits():
    with pytest.raises(ZeroHits) as info:
        estimate_small_dev(BROWNIAN, 1.0, 0.05, 200, PathConfig(n_steps=16))
    est = info.value.estimate
    assert est.hits == 0 and math.isnan(est.neg_log_p) and 0 < est.ci_high < 0.05


def test_estimate_domain():
    with pytest.raises(DomainError):
        estimate_small_dev(BROWNIAN, 1.0, 1.0, 50)
    with pytest.raises(DomainError):
        estimate_small_dev(BROWNIAN, 1.0, -1.0, 500)


def test_brownian_scaling():
    cfg = PathConfig(n_steps=16, seed=21)
    a = estimate_small_dev(BROWNIAN, 1.0, 1.0, 100_000, cfg)
    b = estimate_small_dev(BROWNIAN, 0.25, 0.5, 100_000, cfg.with_(seed=22))
    se = math.sqrt(a.p_hat * (1 - a.p_hat) / a.n_paths + b.p_hat * (1 - b.p_hat) / b.n_paths)
    assert abs(a.p_hat - b.p_hat) <= 3 * se
    assert abs(b.p_hat - brownian_ball_probability(0.25, 0.5)) <= 3 * math.sqrt(b.p_hat * (1 - b.p_hat) / b.n_paths)


def test_delta_robustness():
    model = catalog.get("brownian_jumps")
    cfg = PathConfig(n_steps=64, delta=0.1, seed=31)
    a = estimate_small_dev(model, 0.5, 0.5, 100_000, cfg)
    b = estimate_small_dev(model, 0.5, 0.5, 100_000, cfg.with_(delta=0.05, seed=32))
    se = math.sqrt(a.p_hat * (1 - a.p_hat) / a.n_paths + b.p_hat * (1 - b.p_hat) / b.n_paths)
    assert abs(a.p_hat - b.p_hat) <= 3 * se


def test_gaussian_gate():
    with pytest.raises(ApproximationUnsound):
        simulate_path(catalog.get("variance_gamma"), PathConfig(delta=0.01))
    with pytest.raises(ApproximationUnsound):
        simulate_path(catalog.get("symmetric_polynomial"), PathConfig(delta=0.3))
    simulate_path(catalog.get("variance_gamma"), PathConfig(delta=0.01, small_jump_mode="drop"))


def test_config_validation():
    with pytest.raises(DomainError):
        PathConfig(n_steps=100)
    with pytest.raises(DomainError):
        PathConfig(delta=1.0)
    with pytest.raises(DomainError):
        PathConfig(small_jump_mode="exact")


def test_wilson_interval():
    lo, hi = wilson_interval(37, 100)
    assert lo < 0.37 < hi
    assert wilson_interval(0, 100)[0] == 0.0


# --- bridges ----------------------------------------------------------------


@pytest.mark.parametrize("x", [0.4, 0.8, 1.2, 2.0])
def test_bridge_stay_is_kolmogorov(x):
    # standard bridge from 0 to 0: P(sup |bridge| < x) is the Kolmogorov law
    p = bridge_stay_probability(np.array([0.0]), np.array([0.0]), np.array([1.0]), -x, x)[0]
    assert p == pytest.approx(stats.kstwobign.cdf(x), abs=1e-12)


@pytest.mark.parametrize("a,b,s", [(0.3, 0.1, 0.5), (1.0, 2.0, 2.0), (0.05, 0.4, 0.01)])
def test_bridge_stay_one_sided(a, b, s):
    # far upper barrier: single-barrier reflection formula
    p = bridge_stay_probability(np.array([a]), np.array([b]), np.array([s]), 0.0, 1e3)[0]
    assert p == pytest.approx(-math.expm1(-2 * a * b / s), rel=1e-12)


def test_bridge_sup_sampler_law():
    n = 5000
    u = np.random.Generator(np.random.Philox(8)).random(n)
    sups = sample_bridge_abs_sup(np.zeros(n), np.zeros(n), np.ones(n), u)
    assert stats.kstest(sups, stats.kstwobign.cdf).pvalue > 1e-3


def test_geometric_grid_marks():
    grid, marks = geometric_grid(0.5, 2, 5, 8)
    assert np.all(np.diff(grid) > 0)
    for k, i in zip(range(2, 6), marks):
        assert grid[i] == pytest.approx(0.5**k, rel=1e-15)


def test_running_sup_nondecreasing():
    grid, _ = geometric_grid(0.5, 1, 6, 16)
    sups = running_sup_on_grid(BROWNIAN, grid, 50, PathConfig(seed=4))
    assert np.all(np.diff(sups, axis=1) >= 0)
    grid_only = running_sup_on_grid(BROWNIAN, grid, 50, PathConfig(seed=4), exact_sup=False)
    assert np.all(sups >= grid_only)


# --- Variance-Gamma ---------------------------------------------------------


def test_vg_symmetric():
    _, v = simulate_variance_gamma(1.0, 1.0, 0.0, 1.0, PathConfig(n_steps=16), 5, n_paths=100_000)
    x = v[:, -1]
    # sd of the sample skewness is about sqrt(6 / n) for near-normal data; use the exact moment form
    n = x.size
    m2 = np.mean(x**2)
    skew = np.mean(x**3) / m2**1.5
    se = math.sqrt(np.var((x**3) / m2**1.5) / n)
    assert abs(skew) <= 3 * se


@pytest.mark.parametrize("a,b,mu", [(1.0, 1.0, 0.5), (2.0, 3.0, -1.0)])
def test_vg_mean(a, b, mu):
    _, v = simulate_variance_gamma(a, b, mu, 1.0, PathConfig(n_steps=16), 6, n_paths=100_000)
    x = v[:, -1]
    assert abs(x.mean() - mu * a / b) <= 3 * x.std() / math.sqrt(x.size)
    # Var X_1 = sigma^2 a / b + mu^2 a / b^2
    assert x.var() == pytest.approx(a / b + mu**2 * a / b**2, rel=0.03)


def test_vg_matches_levy_model_simulation():
    # at t = 0.01 a jump above 1 (cut from the triplet) hits about 0.3% of paths
    cfg = PathConfig(horizon=0.01, n_steps=16, delta=1e-4, small_jump_mode="drop")
    _, direct = simulate_variance_gamma(1.0, 1.0, 0.5, 1.0, cfg, 3, n_paths=20_000)
    _, triplet = simulate_paths(catalog.get("variance_gamma_drift"), cfg, 20_000, rng=4)
    # the dropped jumps below delta move X_t by about 1e-6; compare above that scale
    snap = lambda x: np.where(np.abs(x) < 1e-3, 0.0, x)
    assert stats.ks_2samp(snap(direct[:, -1]), snap(triplet[:, -1])).pvalue > 1e-3


def test_vg_refinement_monotone_sup():
    cfg = PathConfig(n_steps=16, seed=12)
    s0 = simulate_variance_gamma(1.0, 1.0, 0.5, 1.0, cfg).sup_norm
    s2 = simulate_variance_gamma(1.0, 1.0, 0.5, 1.0, cfg, refine_levels=2)
    assert np.max(np.abs(s2.values)) >= s0


def test_vg_sup_over_t_vanishes():
    # no linear drift: ||X||_t / t -> 0 even though E X_t / t = mu a / b
    meds = []
    for t in (1e-1, 1e-2, 1e-4):
        _, v = simulate_variance_gamma(1.0, 1.0, 0.5, 1.0, PathConfig(horizon=t, n_steps=64), 3, n_paths=2000)
        meds.append(np.median(np.max(np.abs(v), axis=1)) / t)
    assert meds[0] > meds[1] > meds[2]
    assert meds[-1] < 0.05
