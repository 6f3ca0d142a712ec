import math
import subprocess
import sys

import pytest

from levy_lil import io
from levy_lil.cli import COMMANDS, main

BROWNIAN = """\
# Brownian motion, sigma = 1
model.family = brownian
model.sigma2 = 1
rate.eps_min = 1e-3
rate.n_points = 40
norming.family = brownian
simulate.n_paths = 20000
simulate.n_steps = 64
simulate.t = 1.0
simulate.eps = 1.0
verify.t_grid = 0.1, 0.2
verify.eps_grid = 0.2, 0.3
verify.k_max = 12
verify.n_paths = 20
verify.substeps = 32
"""

POLYNOMIAL = """\
model.family = two_sided_polynomial
model.c1 = 1
model.alpha1 = 1
model.c2 = 1
rate.eps_min = 1e-3
rate.eps_max = 0.1
rate.n_points = 21
"""

DRIFT = """\
model.family = two_sided_polynomial
model.c1 = 0.01
model.alpha1 = 0.5
model.gamma = 2.02
"""


def _cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run_all(cfg, out):
    codes = {}
    for name in sorted(COMMANDS):
        codes[name] = main([name, "--config", cfg, "--out", str(out)])
    return codes


@pytest.fixture(scope="module")
def brownian_outputs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    cfg = _cfg(base, BROWNIAN)
    first = _run_all(cfg, base / "a")
    second = _run_all(cfg, base / "b")
    return base, first, second


def test_every_command_succeeds(brownian_outputs):
    _, first, second = brownian_outputs
    assert set(first.values()) == {0} and set(second.values()) == {0}


def test_reruns_are_byte_identical(brownian_outputs):
    base, _, _ = brownian_outputs
    names = sorted(p.name for p in (base / "a").iterdir())
    assert names == sorted(p.name for p in (base / "b").iterdir())
    assert len(names) >= 14
    for name in names:
        assert (base / "a" / name).read_bytes() == (base / "b" / name).read_bytes(), name


def test_outputs_round_trip(brownian_outputs):
    base, _, _ = brownian_outputs
    out = base / "a"
    for name in ("rate.csv", "norming.csv", "sd_bounds.csv", "sandwich.csv", "lil.csv", "lil_minima.csv"):
        header, rows = io.read_csv(out / name)
        text = "\n".join([",".join(header)] + [",".join(io.fmt(v) for v in r) for r in rows]) + "\n"
        assert text == (out / name).read_text(), name
    for name in COMMANDS:
        blocks = io.read_summary(out / f"{name}.txt")
        assert io.write_summary(base / "copy.txt", blocks) == (out / f"{name}.txt").read_text(), name


def test_brownian_rate_rows(brownian_outputs):
    base, _, _ = brownian_outputs
    table = io.read_rate_table(base / "a" / "rate.csv")
    for e, f in zip(table.eps_grid, table.f_values):
        assert f == pytest.approx(e**-2, rel=1e-12)


def test_brownian_norming_at_t_max(brownian_outputs):
    base, _, _ = brownian_outputs
    _, rows = io.read_csv(base / "a" / "norming.csv")
    t, b = rows[-1]
    assert t == pytest.approx(math.exp(-math.e), rel=1e-15)
    assert b == pytest.approx(0.2853, abs=1e-4)


def test_brownian_estimate(brownian_outputs):
    base, _, _ = brownian_outputs
    (est,) = io.read_estimates(base / "a" / "estimates.csv")
    assert est.n_paths == 20000
    assert abs(est.p_hat - 0.37078) < 0.015


def test_polynomial_rate_row(tmp_path):
    assert main(["rate", "--config", _cfg(tmp_path, POLYNOMIAL), "--out", str(tmp_path)]) == 0
    table = io.read_rate_table(tmp_path / "rate.csv")
    assert table.eps_grid[0] == 0.1
    assert table.f_values[0] == pytest.approx(38.0, rel=1e-10)


def test_drift_dominated_notice(tmp_path, capsys):
    cfg = _cfg(tmp_path, DRIFT)
    assert main(["rate", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[drift_dominated]" in out and "effective_drift = 2" in out
    assert (tmp_path / "rate.csv").read_text() == "eps,F\n"
    assert main(["norming", "--config", cfg, "--out", str(tmp_path)]) == 0
    _, rows = io.read_csv(tmp_path / "norming.csv")
    for t, b in rows:
        assert b == pytest.approx(2 * t, rel=1e-12)


def test_seed_flag_overrides(tmp_path):
    cfg = _cfg(tmp_path, BROWNIAN.replace("simulate.n_paths = 20000", "simulate.n_paths = 2000"))
    main(["estimate-sd", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "5"])
    main(["estimate-sd", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "6"])
    main(["estimate-sd", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "5"])
    a, b, c = ((tmp_path / d / "estimates.csv").read_bytes() for d in "abc")
    assert a == c and a != b


def test_unknown_key_exit_code(tmp_path, capsys):
    cfg = _cfg(tmp_path, "model.family = brownian\nmodel.foo = 1\n")
    assert main(["rate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_no_estimable_cells_exit_code(tmp_path, capsys):
    cfg = _cfg(tmp_path, "model.family = brownian\nverify.t_grid = 400\nverify.eps_grid = 0.1\n")
    assert main(["verify-sandwich", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "estimable" in capsys.readouterr().err


def test_no_convergence_exit_code(tmp_path, capsys):
    # one-sided BV measure with effective drift 0: Lambda' never changes sign
    cfg = _cfg(tmp_path, "model.family = two_sided_polynomial\nmodel.c1 = 1\nmodel.alpha1 = 0.5\nmodel.gamma = 2\n")
    assert main(["rate", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "sign change" in capsys.readouterr().err


def test_variance_gamma_needs_lambda(tmp_path, capsys):
    text = "model.family = variance_gamma\nmodel.a = 1\nmodel.b = 1\n"
    assert main(["norming", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 2
    assert "norming.lambda" in capsys.readouterr().err
    text += "norming.lambda = 1\nnorming.family = variance_gamma\n"
    assert main(["norming", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 0


def test_console_entry_point(tmp_path):
    cfg = _cfg(tmp_path, POLYNOMIAL)
    res = subprocess.run(
        [sys.executable, "-m", "levy_lil.cli", "sd-bounds", "--config", cfg, "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0, res.stderr
    assert res.stdout.startswith("[sd_bounds]")
