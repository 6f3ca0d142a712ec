"""Command-line front end.

    levy-lil <command> --config run.cfg [--out DIR] [--seed N]

Commands: rate, norming, sd-bounds, estimate-sd, verify-sandwich, verify-lil,
check-conditions.  Tables go to comma-separated files in the output directory;
a key = value summary goes to standard output and to ``<command>.txt``.
Exit status is 0 on success, 1 when a verification fails and 2 on invalid
input or when nothing could be checked.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import build_model, load_config
from .errors import (
    DriftDominated,
    LevyLILError,
    NoConvergence,
    NoEstimableCells,
    NotMonotone,
    UnderflowRange,
    ZeroHits,
)
from .levy_model import effective_drift, is_symmetric
from .norming import NormingFunction, check_b_regularity
from .rate_function import (
    build_rate_table,
    check_condition_M,
    check_esscher_negligible,
    check_flargeru,
    estimate_rv_exponent,
    sd_bounds,
    solve_esscher_drift,
)
from .simulate import PathConfig, estimate_small_dev
from .verify import lil_liminf_estimate, sandwich_check

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class Run:
    """Parsed config plus the objects every command needs."""

    def __init__(self, cfg, out, seed):
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = cfg.get("simulate", "seed") if seed is None else seed
        self.model = build_model(cfg)
        self._table = None
        self.lines = []

    def path_config(self, **kw):
        c = self.cfg
        base = PathConfig(
            horizon=c.get("simulate", "t"),
            n_steps=c.get("simulate", "n_steps"),
            delta=c.get("simulate", "delta"),
            small_jump_mode=c.get("simulate", "small_jump_mode"),
            seed=self.seed,
            refine_levels=c.get("simulate", "refine_levels"),
        )
        return base.with_(**kw) if kw else base

    def table(self):
        if self._table is None:
            c = self.cfg
            self._table = build_rate_table(
                self.model,
                c.get("rate", "eps_min"),
                c.get("rate", "eps_max"),
                c.get("rate", "n_points"),
                n_jobs=c.get("rate", "n_jobs"),
            )
        return self._table

    def norming(self):
        """NormingFunction from the config; drift-dominated models get |c| t."""
        c = self.cfg
        t_max = c.get("norming", "t_max")
        family = c.get("norming", "family")
        is_vg = c.model["family"] == "variance_gamma"
        if is_vg and not c.has("norming", "lambda"):
            raise LevyLILError("variance_gamma norming needs an explicit norming.lambda")
        lam = c.get("norming", "lambda", 1.0)
        if family is not None:
            params = _closed_form_params(family, c, self.model, lam)
            return NormingFunction.closed_form(family, params, lam, t_max)
        try:
            table = self.table()
        except DriftDominated as exc:
            return NormingFunction.closed_form("drift_dominated", {"c": exc.drift}, lam, t_max)
        extrapolate = c.get("norming", "extrapolate") == "true"
        return NormingFunction.from_table(table, lam, t_max, extrapolate)

    def emit(self, title, pairs):
        text = io.format_summary(pairs, title)
        self.lines.append(text)
        sys.stdout.write(text)

    def finish(self, name):
        (self.out / f"{name}.txt").write_text("\n".join(self.lines))


def _closed_form_params(family, cfg, model, lam):
    m = cfg.model
    if family == "brownian":
        return {"sigma": math.sqrt(model.sigma2)}
    if family == "drift_dominated":
        return {"c": effective_drift(model)}
    if family == "variance_gamma":
        return {"lam": lam}
    if family == "polynomial":
        return {"alpha1": m["alpha1"]}
    if family == "log_corrected":
        return {"alpha": m["alpha"], "gamma_exp": m.get("gamma_exp", 0.0)}
    if family == "stable":
        return {"alpha": m["alpha1"]}
    return {}


# --- commands ---------------------------------------------------------------


def cmd_rate(run):
    model = run.model
    try:
        table = run.table()
    except DriftDominated as exc:
        run.emit("drift_dominated", {"effective_drift": exc.drift, "norming": "b(t) = |c| t"})
        io.write_csv(run.out / "rate.csv", io.RATE_HEADER, [])
        return EXIT_OK
    io.write_rate_table(run.out / "rate.csv", table)
    run.emit("rate", {"kind": table.kind, "n_points": len(table), "eps0": table.eps0})
    diag = {"symmetric": is_symmetric(model)}
    probe = [e for e in (1e-1, 1e-2, 1e-3, 1e-4) if table.eps_grid[-1] <= e <= table.eps_grid[0]]
    for e in probe:
        sol = solve_esscher_drift(model, e)
        diag[f"u_eps[{e:g}]"] = sol.u_eps
    _esscher_block(run, diag, probe)
    _condition_m_block(run, diag, table)
    diag["flargeru_max_ratio"] = check_flargeru(model, table)["max_ratio"]
    run.emit("diagnostics", diag)
    return EXIT_OK


def _esscher_block(run, diag, grid):
    try:
        rep = check_esscher_negligible(run.model, grid)
        diag["esscher_ratio_trend"] = rep["verdict"]
        diag["esscher_ratio_last"] = float(rep["ratio"][-1])
    except (LevyLILError, ValueError) as exc:
        diag["esscher_ratio_trend"] = f"unavailable ({exc})"


def _condition_m_block(run, diag, table):
    c = run.cfg
    try:
        rep = check_condition_M(run.model, table, c.get("verify", "beta_grid"), c.get("verify", "n_max"))
        diag["condition_M"] = "pass" if rep["pass"] else "fail"
        for beta, (ns, logs) in rep["rows"].items():
            diag[f"condition_M_last_log_ratio[beta={beta:g}]"] = float(logs[-1])
    except UnderflowRange as exc:
        diag["condition_M"] = f"unavailable ({exc})"


def cmd_norming(run):
    c = run.cfg
    nf = run.norming()
    t_grid = np.geomspace(c.get("norming", "t_min"), c.get("norming", "t_max"), c.get("norming", "n_points"))
    rows = []
    skipped = 0
    for t in t_grid:
        try:
            rows.append((float(t), nf(float(t))))
        except LevyLILError:
            skipped += 1
    io.write_csv(run.out / "norming.csv", io.NORMING_HEADER, rows)
    run.emit("norming", {"source": nf.source, "lambda": nf.lam, "rows": len(rows), "out_of_table": skipped})
    return EXIT_OK


def cmd_sd_bounds(run):
    c = run.cfg
    rows = []
    for t in c.get("verify", "t_grid"):
        for eps in c.get("verify", "eps_grid"):
            lo, hi = sd_bounds(run.model, t, eps)
            rows.append((t, eps, lo, hi))
    io.write_csv(run.out / "sd_bounds.csv", io.BOUNDS_HEADER, rows)
    run.emit("sd_bounds", {"cells": len(rows)})
    return EXIT_OK


def cmd_estimate_sd(run):
    c = run.cfg
    t, eps = c.get("simulate", "t"), c.get("simulate", "eps")
    try:
        est = estimate_small_dev(
            run.model, t, eps, c.get("simulate", "n_paths"), run.path_config(horizon=t), run.seed,
            c.get("simulate", "n_jobs"),
        )
        status = "ok"
    except ZeroHits as exc:
        est, status = exc.estimate, "zero_hits"
    io.write_csv(run.out / "estimates.csv", io.ESTIMATE_HEADER, [io.estimate_row(est)])
    run.emit("estimate", {"status": status, "p_hat": est.p_hat, "ci_low": est.ci_low,
                          "ci_high": est.ci_high, "neg_log_p": est.neg_log_p})
    return EXIT_OK


def cmd_verify_sandwich(run):
    c = run.cfg
    report = sandwich_check(
        run.model, c.get("verify", "t_grid"), c.get("verify", "eps_grid"), c.get("simulate", "n_paths"),
        run.path_config(), run.seed, n_jobs=c.get("simulate", "n_jobs"),
    )
    rows = [
        (r.t, r.eps, r.lower, r.upper, r.neg_log_p, r.band_low, r.band_high, r.hits, r.n_paths, r.status)
        for r in report.rows
    ]
    io.write_csv(run.out / "sandwich.csv", io.SANDWICH_HEADER, rows)
    n_fail = sum(r.status == "fail" for r in report.rows)
    run.emit("sandwich", {"cells": len(rows), "checked": len(report.checked), "failed": n_fail})
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify_lil(run):
    c = run.cfg
    nf = run.norming()
    ks = range(c.get("verify", "k_min"), c.get("verify", "k_max") + 1)
    rep = lil_liminf_estimate(
        run.model, nf, c.get("verify", "r"), ks, c.get("verify", "n_paths"), run.path_config(), run.seed,
        c.get("verify", "substeps"),
    )
    med = np.median(rep.ratios, axis=0)
    rows = [(int(k), float(t), nf(float(t)), float(m)) for k, t, m in zip(rep.ks, rep.times, med)]
    io.write_csv(run.out / "lil.csv", ["k", "t", "b", "median_ratio"], rows)
    io.write_csv(run.out / "lil_minima.csv", ["path", "min_ratio"], list(enumerate(rep.minima.tolist())))
    run.emit("lil", rep.summary())
    return EXIT_OK


def cmd_check_conditions(run):
    c = run.cfg
    model = run.model
    out = {"symmetric": is_symmetric(model)}
    try:
        table = run.table()
    except DriftDominated as exc:
        out["drift_dominated"] = True
        out["effective_drift"] = exc.drift
        run.emit("conditions", out)
        return EXIT_OK
    grid = table.eps_grid[(table.eps_grid <= 0.1) & (table.f_values > math.e)]
    _esscher_block(run, out, grid[:: max(1, grid.size // 12)])
    _condition_m_block(run, out, table)
    out["flargeru_max_ratio"] = check_flargeru(model, table)["max_ratio"]
    try:
        out["rv_exponent"] = estimate_rv_exponent(table)
    except LevyLILError as exc:
        out["rv_exponent"] = f"unavailable ({exc})"
    try:
        nf = run.norming()
        t_max = nf.t_max
        t_grid = np.geomspace(t_max / 2**20, t_max, 21)
        reg = check_b_regularity(nf, t_grid)
        out["b_regularity_C_hat"] = reg["C_hat"]
        out["b_regularity"] = "pass" if reg["pass"] else "fail"
    except LevyLILError as exc:
        out["b_regularity"] = f"unavailable ({exc})"
    run.emit("conditions", out)
    return EXIT_OK


COMMANDS = {
    "rate": cmd_rate,
    "norming": cmd_norming,
    "sd-bounds": cmd_sd_bounds,
    "estimate-sd": cmd_estimate_sd,
    "verify-sandwich": cmd_verify_sandwich,
    "verify-lil": cmd_verify_lil,
    "check-conditions": cmd_check_conditions,
}


def build_parser():
    p = argparse.ArgumentParser(prog="levy-lil", description="Small-deviation rates and LIL normings for Levy processes.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="flat section.key = value file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=None, help="overrides simulate.seed")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        run = Run(cfg, args.out, args.seed)
        code = COMMANDS[args.command](run)
        run.finish(args.command)
        return code
    except NoEstimableCells as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NoConvergence, NotMonotone) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (LevyLILError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
