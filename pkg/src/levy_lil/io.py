"""Comma-separated tables and key = value summaries.

Floats are written with 17 significant digits so every file parses back to
the exact values that produced it.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def parse_value(s: str):
    s = s.strip()
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path):
    """(header, rows) with every cell parsed by parse_value."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[parse_value(c) for c in row] for row in r]
    return header, rows


def format_summary(pairs, title=None):
    lines = [f"[{title}]"] if title else []
    lines += [f"{k} = {fmt(v)}" for k, v in pairs.items()]
    return "\n".join(lines) + "\n"


def write_summary(path, blocks):
    """blocks: mapping title -> mapping key -> value."""
    text = "\n".join(format_summary(pairs, title) for title, pairs in blocks.items())
    Path(path).write_text(text)
    return text


def read_summary(path):
    blocks = {}
    current = None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = blocks.setdefault(line[1:-1], {})
            continue
        # keys may hold "=" (e.g. "[beta=2]"); the separator is " = "
        key, _, value = line.partition(" = ")
        if current is None:
            current = blocks.setdefault("", {})
        current[key.strip()] = parse_value(value)
    return blocks


RATE_HEADER = ["eps", "F"]
NORMING_HEADER = ["t", "b"]
ESTIMATE_HEADER = ["t", "eps", "n_paths", "hits", "p_hat", "ci_low", "ci_high", "neg_log_p"]
SANDWICH_HEADER = ["t", "eps", "lower", "upper", "neg_log_p", "band_low", "band_high", "hits", "n_paths", "status"]
BOUNDS_HEADER = ["t", "eps", "lower", "upper"]


def write_rate_table(path, table):
    return write_csv(path, RATE_HEADER, table.rows())


def read_rate_table(path, kind="general"):
    from .rate_function import RateTable

    header, rows = read_csv(path)
    if header != RATE_HEADER:
        raise ValueError(f"expected header {RATE_HEADER}, got {header}")
    return RateTable([r[0] for r in rows], [r[1] for r in rows], kind)


def estimate_row(e):
    return [e.t, e.eps, e.n_paths, e.hits, e.p_hat, e.ci_low, e.ci_high, e.neg_log_p]


def read_estimates(path):
    from .simulate import SmallDevEstimate

    header, rows = read_csv(path)
    if header != ESTIMATE_HEADER:
        raise ValueError(f"expected header {ESTIMATE_HEADER}, got {header}")
    return [
        SmallDevEstimate(float(r[0]), float(r[1]), int(r[2]), int(r[3]), *map(float, r[4:]))
        for r in rows
    ]
