"""Path simulation and Monte Carlo small-deviation estimates.

A path on [0, T] is

    X_t = c_delta t + W_t + J_t,

with c_delta = gamma - int_{delta < |x| <= 1} x Pi(dx), W a Brownian motion of
variance rate sigma^2 (+ sigma(delta)^2 when small jumps are replaced by a
Gaussian) and J the uncompensated compound Poisson sum of jumps larger than
delta.  Values are exact at grid points; a jump falling in (t_i, t_{i+1}] is
treated as arriving at t_{i+1} for anything evaluated between grid points.

Paths are simulated in blocks of BLOCK paths.  Block b draws from sub-streams
keyed ``(b, purpose, ...)`` and every draw is laid out row by row, so path i of
a block is the same whatever number of paths is requested.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ApproximationUnsound, DomainError, ZeroHits
from .levy_model import JumpSizeSampler, outer_first_moment, sample_jump_batch, tail_mass, truncated_moment
from .streams import BRIDGE, GAUSS, REFINE, SUBORDINATOR, as_stream

BLOCK = 256
SOUNDNESS_RATIO = 3.0
GAUSSIAN = "gaussian"
DROP = "drop"


@dataclass(frozen=True)
class PathConfig:
    horizon: float = 1.0
    n_steps: int = 1024
    delta: float = 0.01
    small_jump_mode: str = GAUSSIAN
    seed: int = 0
    refine_levels: int = 2

    def __post_init__(self):
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        n = self.n_steps
        if n < 16 or n & (n - 1):
            raise DomainError("n_steps must be a power of two and at least 16")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        if self.small_jump_mode not in (GAUSSIAN, DROP):
            raise DomainError(f"small_jump_mode must be {GAUSSIAN!r} or {DROP!r}")
        if self.refine_levels < 0:
            raise DomainError("refine_levels must be nonnegative")

    def with_(self, **kw) -> "PathConfig":
        fields = dict(self.__dict__)
        fields.update(kw)
        return PathConfig(**fields)


@dataclass(frozen=True)
class PathSample:
    times: np.ndarray
    values: np.ndarray
    sup_norm: float


@dataclass(frozen=True)
class SmallDevEstimate:
    t: float
    eps: float
    n_paths: int
    hits: int
    p_hat: float
    ci_low: float
    ci_high: float
    neg_log_p: float

    def neg_log_band(self):
        """(-log ci_high, -log ci_low), the interval for -log p."""
        hi = math.inf if self.ci_low <= 0 else -math.log(self.ci_low)
        return -math.log(self.ci_high), hi


def small_jump_sigma(model, delta):
    """sigma(delta) = (int_{|x| <= delta} x^2 Pi(dx))^(1/2)."""
    return math.sqrt(truncated_moment(model, delta, 2))


def sound_cutoff(model, ratio=SOUNDNESS_RATIO, delta_max=0.5):
    """Largest delta <= delta_max with sigma(delta) / delta >= ratio, or None."""
    if not model.has_jumps:
        return None

    def ok(d):
        return small_jump_sigma(model, d) >= ratio * d

    if ok(delta_max):
        return delta_max
    lo, hi = 1e-12, delta_max
    if not ok(lo):
        return None
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


class _Plan:
    """Per-model constants shared by every block."""

    def __init__(self, model, config):
        model.check_nondegenerate()
        self.model = model
        self.config = config
        delta = config.delta
        self.var_rate = model.sigma2
        self.sampler = None
        if model.has_jumps:
            s2 = truncated_moment(model, delta, 2)
            if config.small_jump_mode == GAUSSIAN:
                if math.sqrt(s2) < SOUNDNESS_RATIO * delta:
                    raise ApproximationUnsound(
                        f"sigma(delta)/delta = {math.sqrt(s2) / delta:.3g} < {SOUNDNESS_RATIO:g} "
                        f"at delta={delta:g}; lower delta or use small_jump_mode='drop'"
                    )
                self.var_rate += s2
            if tail_mass(model, delta) > 0:
                self.sampler = JumpSizeSampler(model, delta)
            self.drift = model.gamma - outer_first_moment(model, delta)
        else:
            self.drift = model.gamma


def _refine_gaussian(W, dt, var_rate, gen):
    z = gen.standard_normal((W.shape[0], W.shape[1] - 1))
    mid = 0.5 * (W[:, :-1] + W[:, 1:]) + math.sqrt(var_rate * dt / 4.0) * z
    out = np.empty((W.shape[0], 2 * W.shape[1] - 1))
    out[:, 0::2] = W
    out[:, 1::2] = mid
    return out


def _jump_path(counts, times, sizes, idx, n, m):
    """J[:, i] = sum of the jumps placed at grid index <= i.

    Built from time-ordered running sums per path, so a refined grid reads the
    very same partial sums at the coarse nodes.
    """
    J = np.zeros((n, m + 1))
    if sizes.size == 0:
        return J
    pid = np.repeat(np.arange(n), counts)
    order = np.lexsort((times, pid))
    idx, sizes = idx[order], sizes[order]
    csum = np.empty_like(sizes)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    for p in np.nonzero(counts)[0]:
        np.cumsum(sizes[offsets[p] : offsets[p + 1]], out=csum[offsets[p] : offsets[p + 1]])
    key = pid * (m + 1) + idx
    last = np.append(key[1:] != key[:-1], True)
    J[pid[last], idx[last]] = csum[last]
    have = np.zeros((n, m + 1), dtype=bool)
    have[pid[last], idx[last]] = True
    pos = np.where(have, np.arange(m + 1)[None, :], 0)
    np.maximum.accumulate(pos, axis=1, out=pos)
    return np.take_along_axis(J, pos, axis=1)


def _block_values(plan, stream, n, horizon, n_steps, levels):
    """Grid, values, values just before each step-end jump, and the step."""
    dt = horizon / n_steps
    W = np.zeros((n, n_steps + 1))
    if plan.var_rate > 0:
        z = stream.generator(GAUSS).standard_normal((n, n_steps))
        W[:, 1:] = np.cumsum(z * math.sqrt(plan.var_rate * dt), axis=1)
        for level in range(levels):
            W = _refine_gaussian(W, dt, plan.var_rate, stream.generator(REFINE, level))
            dt /= 2.0
    else:
        W = np.zeros((n, n_steps * 2**levels + 1))
        dt /= 2.0**levels
    m = W.shape[1] - 1
    J = np.zeros_like(W)
    if plan.sampler is not None:
        counts, times, sizes = sample_jump_batch(
            plan.model, plan.config.delta, horizon, n, stream, plan.sampler
        )
        idx = np.clip(np.ceil(times / dt).astype(np.int64), 1, m)
        J = _jump_path(counts, times, sizes, idx, n, m)
    # i / m is correctly rounded, so refined grids contain the coarse nodes exactly
    grid = np.arange(m + 1) / m * horizon
    cont = plan.drift * grid[None, :] + W
    values = cont + J
    values[:, 0] = 0.0
    pre = cont[:, 1:] + J[:, :-1]
    return grid, values, pre, dt


def _block_stream(rng, block):
    return as_stream(rng).child(block)


def simulate_paths(model, config, n_paths, rng=None, refine_levels=0):
    """Grid values of ``n_paths`` paths at n_steps * 2^refine_levels steps."""
    plan = _Plan(model, config)
    rng = config.seed if rng is None else rng
    rows = []
    grid = None
    for b, n in _blocks(n_paths):
        grid, values, _, _ = _block_values(
            plan, _block_stream(rng, b), n, config.horizon, config.n_steps, refine_levels
        )
        rows.append(values)
    return grid, np.vstack(rows)


def grid_sup_norms(model, config, n_paths, rng=None, refine_levels=0):
    """max |X| over the refined grid for each path, computed block by block."""
    plan = _Plan(model, config)
    rng = config.seed if rng is None else rng
    out = []
    for b, n in _blocks(n_paths):
        _, values, _, _ = _block_values(
            plan, _block_stream(rng, b), n, config.horizon, config.n_steps, refine_levels
        )
        out.append(np.max(np.abs(values), axis=1))
    return np.concatenate(out)


def simulate_path(model, config, rng=None):
    """One path on the config grid (path 0 of block 0)."""
    grid, values = simulate_paths(model, config, 1, rng)
    v = values[0]
    return PathSample(grid, v, float(np.max(np.abs(v))))


def sup_norm_refined(model, config, rng=None, refine_levels=0):
    """Grid sup of the same path on the grid refined ``refine_levels`` times.

    Gaussian parts are refined by Brownian-bridge midpoints and jump times stay
    fixed, so the refined grid contains the coarse one and the value is
    nondecreasing in ``refine_levels``.
    """
    if refine_levels < 0:
        raise DomainError("refine_levels must be nonnegative")
    _, values = simulate_paths(model, config, 1, rng, refine_levels)
    return float(np.max(np.abs(values[0])))


def _blocks(n_paths):
    b = 0
    left = n_paths
    while left > 0:
        n = min(BLOCK, left)
        yield b, n
        left -= n
        b += 1


# --- bridge crossing --------------------------------------------------------


def bridge_stay_probability(a, b, s, lo, hi, terms=None):
    """P(a Brownian bridge from a to b with variance s stays inside (lo, hi)).

    Method of images: with w = hi - lo, x = a - lo and y = b - lo,

        P = sum_k exp(-2 k w (k w + y - x) / s) - exp(-2 (x + k w)(y + k w) / s).
    """
    a, b, s = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(s, float))
    w = hi - lo
    x = a - lo
    y = b - lo
    inside = (x > 0) & (x < w) & (y > 0) & (y < w)
    out = np.where(inside, 1.0, 0.0)
    pos = inside & (s > 0)
    if not pos.any():
        return out
    xs, ys, ss = x[pos], y[pos], s[pos]
    ww = np.broadcast_to(w, out.shape)[pos] if np.ndim(w) else w
    if terms is None:
        ratio = float(np.max(ss / ww**2))
        terms = int(min(60, math.ceil(3.0 * math.sqrt(ratio) + 3)))
    total = np.zeros_like(xs)
    for k in range(-terms, terms + 1):
        kw = k * ww
        total += np.exp(-2.0 * kw * (kw + ys - xs) / ss) - np.exp(-2.0 * (xs + kw) * (ys + kw) / ss)
    out[pos] = np.clip(total, 0.0, 1.0)
    return out


def _block_hits(plan, stream, n, t, eps, n_steps, levels):
    _, values, pre, dt = _block_values(plan, stream, n, t, n_steps, levels)
    start = values[:, :-1]
    p_step = bridge_stay_probability(start, pre, plan.var_rate * dt, -eps, eps)
    p_step *= np.abs(values[:, 1:]) < eps
    with np.errstate(divide="ignore"):
        log_stay = np.log(p_step).sum(axis=1)
    u = stream.generator(BRIDGE).random(n)
    return int(np.count_nonzero(np.log(u) < log_stay))


def _hits_task(args):
    plan, seed_stream, b, n, t, eps, n_steps, levels = args
    return _block_hits(plan, seed_stream.child(b), n, t, eps, n_steps, levels)


def wilson_interval(hits, n, level=0.95):
    ci = stats.binomtest(int(hits), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_small_dev(model, t, eps, n_paths, config=None, rng=None, n_jobs=1):
    """Monte Carlo estimate of P(sup_{s <= t} |X_s| <= eps).

    Each path is simulated on n_steps * 2^refine_levels steps; between grid
    points the Gaussian part is a Brownian bridge, and the path counts as a hit
    with the exact probability that all those bridges stay inside (-eps, eps).
    Raises ZeroHits (carrying the estimate) when no path stays inside.
    """
    if n_paths < 100:
        raise DomainError("n_paths must be at least 100")
    if not eps > 0 or not t > 0:
        raise DomainError("t and eps must be positive")
    config = config or PathConfig()
    stream = as_stream(config.seed if rng is None else rng)
    plan = _Plan(model, config)
    tasks = [
        (plan, stream, b, n, t, eps, config.n_steps, config.refine_levels)
        for b, n in _blocks(n_paths)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            counts = list(pool.map(_hits_task, tasks, chunksize=max(1, len(tasks) // (8 * n_jobs))))
    else:
        counts = [_hits_task(task) for task in tasks]
    hits = int(sum(counts))
    est = make_estimate(t, eps, n_paths, hits)
    if hits == 0:
        raise ZeroHits(est)
    return est


def make_estimate(t, eps, n_paths, hits):
    lo, hi = wilson_interval(hits, n_paths)
    p = hits / n_paths
    nlp = -math.log(p) if hits > 0 else math.nan
    return SmallDevEstimate(float(t), float(eps), int(n_paths), int(hits), p, lo, hi, nlp)


# --- nested geometric grids -------------------------------------------------


def geometric_grid(r, k_min, k_max, substeps):
    """Time grid on [0, r^k_min] with ``substeps`` equal steps inside each
    [r^(k+1), r^k] and inside [0, r^k_max]; returns (grid, index of each r^k)."""
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    if k_min > k_max:
        raise DomainError("k_min must not exceed k_max")
    pieces = [np.linspace(0.0, r**k_max, substeps + 1)]
    for k in range(k_max, k_min, -1):
        pieces.append(np.linspace(r**k, r ** (k - 1), substeps + 1)[1:])
    grid = np.concatenate(pieces)
    marks = substeps * (1 + np.arange(k_max - k_min + 1))
    # marks[j] is the index of r^(k_max - j)
    return grid, marks[::-1].copy()


def sample_bridge_abs_sup(a, b, s, u, iters=48):
    """Exact draw of sup |bridge| from a to b with variance s, by inverting
    x -> P(bridge stays in (-x, x)) at the uniforms u."""
    a, b, s, u = (np.asarray(v, float) for v in (a, b, s, u))
    x0 = np.maximum(np.abs(a), np.abs(b))
    out = x0.copy()
    pos = s > 0
    if not pos.any():
        return out
    lo = x0[pos]
    hi = lo + 12.0 * np.sqrt(s[pos])
    aa, bb, ss, uu = a[pos], b[pos], s[pos], u[pos]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = bridge_stay_probability(aa, bb, ss, -mid, mid) < uu
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out[pos] = 0.5 * (lo + hi)
    return out


def running_sup_on_grid(model, grid, n_paths, config, rng=None, exact_sup=True):
    """sup_{s <= grid[i]} |X_s| for every grid point, one row per path.

    With ``exact_sup`` the supremum over each step is drawn exactly from the
    Brownian-bridge law (jumps at step ends); otherwise it is the grid maximum.
    """
    plan = _Plan(model, config)
    stream = as_stream(config.seed if rng is None else rng)
    grid = np.asarray(grid, float)
    dts = np.diff(grid)
    horizon = float(grid[-1])
    out = []
    for blk, n in _blocks(n_paths):
        st = stream.child(blk)
        W = np.zeros((n, grid.size))
        if plan.var_rate > 0:
            z = st.generator(GAUSS).standard_normal((n, dts.size))
            W[:, 1:] = np.cumsum(z * np.sqrt(plan.var_rate * dts)[None, :], axis=1)
        J = np.zeros_like(W)
        if plan.sampler is not None:
            counts, times, sizes = sample_jump_batch(
                model, config.delta, horizon, n, st, plan.sampler
            )
            idx = np.clip(np.searchsorted(grid, times, side="left"), 1, grid.size - 1)
            J = _jump_path(counts, times, sizes, idx, n, grid.size - 1)
        cont = plan.drift * grid[None, :] + W
        values = cont + J
        values[:, 0] = 0.0
        step_sup = np.abs(values[:, 1:])
        if exact_sup and plan.var_rate > 0:
            pre = cont[:, 1:] + J[:, :-1]
            s = np.broadcast_to(plan.var_rate * dts[None, :], pre.shape)
            u = st.generator(BRIDGE).random(pre.shape)
            bridge = sample_bridge_abs_sup(values[:, :-1], pre, s, u)
            step_sup = np.maximum(step_sup, bridge)
        running = np.zeros_like(values)
        running[:, 1:] = np.maximum.accumulate(step_sup, axis=1)
        out.append(running)
    return np.vstack(out)


# --- Variance-Gamma by subordination ----------------------------------------


def _vg_block(a, b, mu, sigma, stream, n, horizon, n_steps, levels):
    dt = horizon / n_steps
    dA = stream.generator(SUBORDINATOR).gamma(a * dt, 1.0 / b, size=(n, n_steps))
    z = stream.generator(GAUSS).standard_normal((n, n_steps))
    A = np.zeros((n, n_steps + 1))
    A[:, 1:] = np.cumsum(dA, axis=1)
    W = np.zeros_like(A)
    W[:, 1:] = np.cumsum(np.sqrt(dA) * z, axis=1)
    for level in range(levels):
        gen = stream.generator(REFINE, level)
        m = A.shape[1] - 1
        f = gen.beta(a * dt / 2.0, a * dt / 2.0, size=(n, m))
        zz = gen.standard_normal((n, m))
        gap = A[:, 1:] - A[:, :-1]
        a_mid = A[:, :-1] + f * gap
        w_mid = W[:, :-1] + f * (W[:, 1:] - W[:, :-1]) + np.sqrt(f * (1 - f) * gap) * zz
        A2 = np.empty((n, 2 * m + 1))
        W2 = np.empty_like(A2)
        A2[:, 0::2], A2[:, 1::2] = A, a_mid
        W2[:, 0::2], W2[:, 1::2] = W, w_mid
        A, W = A2, W2
        dt /= 2.0
    return sigma * W + mu * A


def simulate_variance_gamma(a, b, mu, sigma, config, rng=None, n_paths=1, refine_levels=0):
    """X_t = sigma B_{A_t} + mu A_t with A a Gamma(a, b) subordinator.

    Increments are exact in distribution; refinement uses gamma bridges for A
    and Brownian bridges in the subordinated clock.  Returns a PathSample for
    ``n_paths == 1``, else ``(grid, values)``.
    """
    if not (a > 0 and b > 0):
        raise DomainError("a and b must be positive")
    if sigma == 0:
        raise DomainError("sigma must be nonzero")
    stream = as_stream(config.seed if rng is None else rng)
    rows = [
        _vg_block(a, b, mu, sigma, stream.child(blk), n, config.horizon, config.n_steps, refine_levels)
        for blk, n in _blocks(n_paths)
    ]
    values = np.vstack(rows)
    grid = np.linspace(0.0, config.horizon, values.shape[1])
    if n_paths == 1:
        v = values[0]
        return PathSample(grid, v, float(np.max(np.abs(v))))
    return grid, values

