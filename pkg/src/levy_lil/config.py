"""Run configuration: flat ``section.key = value`` lines.

Blank lines and ``#`` comments are ignored.  Every key is checked against the
schema below and every value is range-checked before any computation starts;
errors carry the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

FAMILIES = (
    "brownian",
    "two_sided_polynomial",
    "symmetric_log_polynomial",
    "variance_gamma",
    "subordinated_bm",
    "tabulated",
)


def _float_list(s):
    parts = [p.strip() for p in s.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit_open(v):
    return 0 < v < 1


SCHEMA = {
    "model": {
        "family": (str, lambda v: v in FAMILIES, f"one of {', '.join(FAMILIES)}"),
        "gamma": (float, math.isfinite, "finite"),
        "sigma2": (float, _nonneg, ">= 0"),
        "c1": (float, _nonneg, ">= 0"),
        "alpha1": (float, lambda v: v < 2, "< 2"),
        "c2": (float, _nonneg, ">= 0"),
        "alpha2": (float, lambda v: v < 2, "< 2"),
        "alpha": (float, lambda v: 0 < v <= 2, "in (0, 2]"),
        "gamma_exp": (float, math.isfinite, "finite"),
        "scale": (float, _pos, "> 0"),
        "a": (float, _pos, "> 0"),
        "b": (float, _pos, "> 0"),
        "mu": (float, math.isfinite, "finite"),
        "sigma": (float, lambda v: v != 0 and math.isfinite(v), "nonzero"),
        "subordinator": (str, lambda v: v in ("gamma", "stable"), "gamma or stable"),
        "sub_a": (float, _pos, "> 0"),
        "sub_b": (float, _pos, "> 0"),
        "sub_beta": (float, _unit_open, "in (0, 1)"),
        "sub_c": (float, _pos, "> 0"),
        "sub_drift": (float, _nonneg, ">= 0"),
        "table": (str, bool, "a file path"),
    },
    "rate": {
        "eps_min": (float, lambda v: 0 < v < 1, "in (0, 1)"),
        "eps_max": (float, lambda v: 0 < v <= 1, "in (0, 1]"),
        "n_points": (int, lambda v: v >= 10, ">= 10"),
        "n_jobs": (int, lambda v: v >= 1, ">= 1"),
    },
    "norming": {
        "lambda": (float, _pos, "> 0"),
        "t_max": (float, lambda v: 0 < v <= math.exp(-math.e), "in (0, e^-e]"),
        "t_min": (float, _pos, "> 0"),
        "n_points": (int, lambda v: v >= 2, ">= 2"),
        "family": (str, bool, "a closed-form family name"),
        "extrapolate": (str, lambda v: v in ("true", "false"), "true or false"),
    },
    "simulate": {
        "n_paths": (int, lambda v: v >= 100, ">= 100"),
        "n_steps": (int, lambda v: v >= 16 and not v & (v - 1), "a power of two >= 16"),
        "delta": (float, _unit_open, "in (0, 1)"),
        "seed": (int, lambda v: 0 <= v < 2**64, "in [0, 2^64)"),
        "refine_levels": (int, lambda v: 0 <= v <= 8, "in [0, 8]"),
        "small_jump_mode": (str, lambda v: v in ("gaussian", "drop"), "gaussian or drop"),
        "t": (float, _pos, "> 0"),
        "eps": (float, _pos, "> 0"),
        "n_jobs": (int, lambda v: v >= 1, ">= 1"),
    },
    "verify": {
        "t_grid": (_float_list, lambda v: all(x > 0 for x in v), "positive numbers"),
        "eps_grid": (_float_list, lambda v: all(0 < x < 0.5 for x in v), "numbers in (0, 1/2)"),
        "r": (float, _unit_open, "in (0, 1)"),
        "k_min": (int, lambda v: v >= 1, ">= 1"),
        "k_max": (int, lambda v: v >= 1, ">= 1"),
        "n_paths": (int, lambda v: v >= 1, ">= 1"),
        "substeps": (int, lambda v: v >= 2, ">= 2"),
        "beta_grid": (_float_list, lambda v: all(1 < x <= 3 for x in v), "numbers in (1, 3]"),
        "n_max": (int, lambda v: 5 <= v <= 60, "in [5, 60]"),
        "t_list": (_float_list, lambda v: all(x > 0 for x in v), "positive numbers"),
        "norming": (str, lambda v: v in ("table", "closed_form"), "table or closed_form"),
    },
}

DEFAULTS = {
    "rate": {"eps_min": 1e-5, "eps_max": 0.5, "n_points": 120, "n_jobs": 1},
    "norming": {"t_max": math.exp(-math.e), "t_min": 1e-12, "n_points": 50, "extrapolate": "false"},
    "simulate": {
        "n_paths": 10000,
        "n_steps": 1024,
        "delta": 0.01,
        "seed": 0,
        "refine_levels": 2,
        "small_jump_mode": "gaussian",
        "t": 1.0,
        "eps": 1.0,
        "n_jobs": 1,
    },
    "verify": {
        "t_grid": (0.25, 0.5, 1.0),
        "eps_grid": (0.1, 0.2, 0.4),
        "r": 0.5,
        "k_min": 5,
        "k_max": 40,
        "n_paths": 200,
        "substeps": 256,
        "beta_grid": (1.5, 2.0),
        "n_max": 40,
        "t_list": (1e-2, 1e-3, 1e-4),
    },
}


@dataclass
class RunConfig:
    model: dict = field(default_factory=dict)
    rate: dict = field(default_factory=dict)
    norming: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)  # (section, key) -> line number

    def get(self, section, key, default=None):
        d = getattr(self, section)
        if key in d:
            return d[key]
        return DEFAULTS.get(section, {}).get(key, default)

    def has(self, section, key):
        return key in getattr(self, section)


def parse_config(text, source="<config>"):
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", lineno)
        lhs, _, rhs = line.partition("=")
        lhs, rhs = lhs.strip(), rhs.strip()
        section, dot, key = lhs.partition(".")
        if not dot or not key:
            raise ConfigError(f"key {lhs!r} must have the form section.key", lineno)
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {section!r}", lineno)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {lhs!r}", lineno)
        if (section, key) in cfg.lines:
            raise ConfigError(f"duplicate key {lhs!r} (first set on line {cfg.lines[section, key]})", lineno)
        conv, check, what = SCHEMA[section][key]
        try:
            value = conv(rhs)
        except ValueError:
            raise ConfigError(f"{lhs} = {rhs!r} is not a valid {getattr(conv, '__name__', 'value')}", lineno) from None
        if not check(value):
            raise ConfigError(f"{lhs} = {rhs} must be {what}", lineno)
        getattr(cfg, section)[key] = value
        cfg.lines[section, key] = lineno
    _cross_check(cfg)
    return cfg


def _cross_check(cfg):
    def fail(msg, *keys):
        line = next((cfg.lines[k] for k in keys if k in cfg.lines), None)
        raise ConfigError(msg, line)

    if cfg.get("rate", "eps_min") >= cfg.get("rate", "eps_max"):
        fail("rate.eps_min must be below rate.eps_max", ("rate", "eps_min"), ("rate", "eps_max"))
    if cfg.get("verify", "k_min") > cfg.get("verify", "k_max"):
        fail("verify.k_min must not exceed verify.k_max", ("verify", "k_min"), ("verify", "k_max"))
    if cfg.get("norming", "t_min") >= cfg.get("norming", "t_max"):
        fail("norming.t_min must be below norming.t_max", ("norming", "t_min"), ("norming", "t_max"))
    family = cfg.model.get("family")
    if family is None:
        raise ConfigError("model.family is required")
    need = {
        "two_sided_polynomial": ("c1", "alpha1"),
        "symmetric_log_polynomial": ("alpha",),
        "variance_gamma": ("a", "b"),
        "subordinated_bm": ("subordinator",),
        "tabulated": ("table",),
    }.get(family, ())
    for key in need:
        if key not in cfg.model:
            fail(f"model.{key} is required for family {family}", ("model", "family"))
    if family == "brownian" and cfg.model.get("sigma2", 1.0) == 0:
        fail("brownian family needs sigma2 > 0", ("model", "sigma2"))


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path))


def build_model(cfg):
    """LevyModel described by the model section."""
    from .catalog import subordinated_model, variance_gamma_model
    from .levy_model import LevyModel
    from .measures import (
        GammaSubordinator,
        StableSubordinator,
        SymmetricLogPolynomial,
        Tabulated,
        TwoSidedPolynomial,
    )

    m = cfg.model
    family = m["family"]
    gamma = m.get("gamma", 0.0)
    sigma2 = m.get("sigma2", 0.0)
    line = cfg.lines.get(("model", "family"))
    try:
        if family == "brownian":
            return LevyModel(gamma, m.get("sigma2", 1.0))
        if family == "two_sided_polynomial":
            measure = TwoSidedPolynomial(m["c1"], m["alpha1"], m.get("c2", 0.0), m.get("alpha2"))
            return LevyModel(gamma, sigma2, measure)
        if family == "symmetric_log_polynomial":
            measure = SymmetricLogPolynomial(m["alpha"], m.get("gamma_exp", 0.0), m.get("scale", 1.0))
            return LevyModel(gamma, sigma2, measure)
        if family == "variance_gamma":
            base = variance_gamma_model(m["a"], m["b"], m.get("mu", 0.0), m.get("sigma", 1.0))
            g = m["gamma"] if "gamma" in m else base.gamma
            return LevyModel(g, sigma2, base.measure)
        if family == "subordinated_bm":
            if m["subordinator"] == "gamma":
                sub = GammaSubordinator(m.get("sub_a", 1.0), m.get("sub_b", 1.0), m.get("sub_drift", 0.0))
            else:
                sub = StableSubordinator(m.get("sub_beta", 0.5), m.get("sub_c", 1.0), m.get("sub_drift", 0.0))
            base = subordinated_model(sub, m.get("sigma", 1.0))
            return LevyModel(gamma, base.sigma2 + sigma2, base.measure)
        if family == "tabulated":
            return LevyModel(gamma, sigma2, _load_tabulated(m["table"], Tabulated))
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid model: {exc}", line) from None
    raise ConfigError(f"unknown family {family!r}", line)


def _load_tabulated(path, cls):
    from .io import read_csv

    header, rows = read_csv(path)
    if header[:2] != ["x", "density_pos"]:
        raise ConfigError(f"{path}: expected header x,density_pos[,density_neg]")
    x = [r[0] for r in rows]
    pos = [r[1] for r in rows]
    neg = [r[2] for r in rows] if len(header) > 2 else None
    return cls(x, pos, neg)
