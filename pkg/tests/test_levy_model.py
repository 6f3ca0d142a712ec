import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from levy_lil import (
    GammaJumps,
    GammaSubordinator,
    LevyModel,
    SubordinatedBM,
    SymmetricLogPolynomial,
    Tabulated,
    TwoSidedPolynomial,
    catalog,
    exp_compensated_integral,
    sample_jumps,
    tail_mass,
    tilted_second_moment,
    truncated_moment,
    truncated_variance,
)
from levy_lil.errors import DomainError, OverflowGuard
from levy_lil.levy_model import (
    JumpSizeSampler,
    effective_drift,
    is_symmetric,
    outer_first_moment,
    sample_jump_batch,
)
from levy_lil.streams import RandomStream

SYM1 = LevyModel(0.0, 0.0, TwoSidedPolynomial(1.0, 1.0, 1.0, 1.0))
BROWNIAN = LevyModel(0.0, 1.0)
HALF = LevyModel(0.0, 0.0, TwoSidedPolynomial(1.0, 0.5))

# mpmath quadrature oracles, 40 digits, frozen
TILT_GOLDEN = 0.17613586717520105  # int_0^0.5 x^(1/2) e^(-x) dx = lower gamma(3/2, 1/2)
EXPCOMP_GOLDEN = 2.0566809622419389  # int_{-0.5}^{0.5} (e^(2x) - 1 - 2x) x^-2 dx


def _measures():
    return [
        TwoSidedPolynomial(1.0, 1.0, 1.0, 1.0),
        TwoSidedPolynomial(1.0, 1.5),
        TwoSidedPolynomial(2.0, 1.2, 0.5, 0.3),
        TwoSidedPolynomial(1.0, -0.5),
        SymmetricLogPolynomial(1.5, 1.0),
        SymmetricLogPolynomial(0.7, -0.5, 2.0),
        GammaJumps(1.0, 1.0, 0.5, 1.0),
    ]


# --- closed forms and examples -------------------------------------------


def test_tail_mass_examples():
    assert tail_mass(SYM1, 0.5) == pytest.approx(2.0, rel=1e-14)
    assert tail_mass(SYM1, 1.0) == 0.0
    assert tail_mass(BROWNIAN, 0.3) == 0.0


def test_truncated_moment_examples():
    assert truncated_moment(SYM1, 0.5, 2) == pytest.approx(1.0, rel=1e-14)
    assert truncated_moment(SYM1, 0.3, 1) == 0.0
    assert truncated_moment(BROWNIAN, 0.5, 2) == 0.0


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5])
def test_eps_domain(bad):
    with pytest.raises(DomainError):
        tail_mass(SYM1, bad)
    with pytest.raises(DomainError):
        truncated_moment(SYM1, bad, 2)


def test_moment_order_domain():
    with pytest.raises(DomainError):
        truncated_moment(SYM1, 0.5, 3)


@pytest.mark.parametrize("measure", _measures(), ids=lambda m: repr(m))
@pytest.mark.parametrize("eps", np.geomspace(1e-4, 1.0, 9))
def test_closed_forms_match_quadrature(measure, eps):
    model = LevyModel(0.0, 0.0, measure)
    a = tail_mass(model, eps)
    b = tail_mass(model, eps, method="quad")
    assert a == pytest.approx(b, rel=1e-8, abs=1e-300)
    a2 = truncated_moment(model, eps, 2)
    b2 = truncated_moment(model, eps, 2, method="quad")
    assert a2 == pytest.approx(b2, rel=1e-8)


@pytest.mark.parametrize("eps", [1e-4, 1e-2, 0.3, 0.9])
def test_polynomial_tail_against_mpmath(eps):
    model = LevyModel(0.0, 0.0, TwoSidedPolynomial(1.0, 1.5, 0.5, 0.3))
    want = mp.quad(lambda x: x**-2.5, [eps, 1]) + 0.5 * mp.quad(lambda x: x**-1.3, [eps, 1])
    assert tail_mass(model, eps) == pytest.approx(float(want), rel=1e-12)


def test_tilted_second_moment_golden():
    want = mp.quad(lambda x: mp.sqrt(x) * mp.exp(-x), [0, 0.5])
    assert float(want) == pytest.approx(TILT_GOLDEN, rel=1e-15)
    assert tilted_second_moment(HALF, 0.5, 1.0) == pytest.approx(TILT_GOLDEN, rel=1e-10)
    assert tilted_second_moment(HALF, 0.5, 1.0, method="quad") == pytest.approx(TILT_GOLDEN, rel=1e-10)


def test_exp_compensated_golden():
    def em(z):
        return mp.expm1(z) - z if abs(z) > mp.mpf("1e-6") else z**2 / 2 + z**3 / 6 + z**4 / 24

    with mp.workdps(40):
        want = mp.quad(lambda x: em(2 * x) / x**2, [-0.5, 0, 0.5])
    assert float(want) == pytest.approx(EXPCOMP_GOLDEN, rel=1e-15)
    assert exp_compensated_integral(SYM1, 0.5, 2.0) == pytest.approx(EXPCOMP_GOLDEN, rel=1e-10)
    assert exp_compensated_integral(SYM1, 0.5, 2.0, method="quad") == pytest.approx(EXPCOMP_GOLDEN, rel=1e-10)


def test_exp_compensated_trivial():
    assert exp_compensated_integral(SYM1, 0.4, 0.0) == 0.0
    assert exp_compensated_integral(BROWNIAN, 0.4, 3.0) == 0.0


def test_tilt_at_zero_is_truncated_moment():
    for m in _measures():
        model = LevyModel(0.0, 0.0, m)
        assert tilted_second_moment(model, 0.2, 0.0) == truncated_moment(model, 0.2, 2)


def test_overflow_guard():
    with pytest.raises(OverflowGuard):
        tilted_second_moment(SYM1, 0.5, 1401.0)
    with pytest.raises(OverflowGuard):
        exp_compensated_integral(SYM1, 0.5, -1401.0)


def test_outer_first_moment():
    # int_eps^1 x * x^-2.5 dx for the one-sided alpha = 1.5 measure
    model = catalog.get("one_sided_15")
    want = (0.01**-0.5 - 1) / 0.5
    assert outer_first_moment(model, 0.01) == pytest.approx(want, rel=1e-12)
    assert outer_first_moment(model, 0.01, method="quad") == pytest.approx(want, rel=1e-9)


def test_effective_drift_and_symmetry():
    assert effective_drift(catalog.get("drift_dominated")) == pytest.approx(2.0, rel=1e-12)
    assert effective_drift(catalog.get("one_sided_05_centered")) == pytest.approx(0.0, abs=1e-12)
    assert is_symmetric(SYM1)
    assert not is_symmetric(catalog.get("brownian_drift"))
    assert not is_symmetric(catalog.get("one_sided_15"))


# --- invariants -------------------------------------------------------------


eps_pairs = st.tuples(st.floats(1e-5, 1.0), st.floats(1e-5, 1.0)).map(sorted)


@settings(max_examples=60, deadline=None)
@given(pair=eps_pairs, idx=st.integers(0, 6))
def test_tail_nonincreasing_moment_nondecreasing(pair, idx):
    model = LevyModel(0.0, 0.0, _measures()[idx])
    lo, hi = pair
    assert tail_mass(model, lo) >= tail_mass(model, hi)
    assert truncated_moment(model, lo, 2) <= truncated_moment(model, hi, 2)


@settings(max_examples=60, deadline=None)
@given(eps=st.floats(1e-4, 1.0), u=st.floats(-200.0, 200.0), idx=st.integers(0, 6))
def test_tilt_bounds(eps, u, idx):
    model = LevyModel(0.0, 0.0, _measures()[idx])
    m2 = truncated_moment(model, eps, 2)
    v = tilted_second_moment(model, eps, u)
    slack = 1e-10
    assert v >= math.exp(-abs(u) * eps) * m2 * (1 - slack)
    assert v <= math.exp(abs(u) * eps) * m2 * (1 + slack)


@settings(max_examples=30, deadline=None)
@given(eps=st.floats(1e-4, 1.0), u=st.floats(0.0, 300.0))
def test_symmetric_tilt_even(eps, u):
    for model in (SYM1, catalog.get("log_polynomial"), catalog.get("variance_gamma")):
        a = tilted_second_moment(model, eps, u)
        b = tilted_second_moment(model, eps, -u)
        assert a == pytest.approx(b, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(eps=st.floats(1e-4, 1.0), idx=st.integers(0, 6), sigma2=st.floats(0.0, 3.0))
def test_sum_rule(eps, idx, sigma2):
    model = LevyModel(0.0, sigma2, _measures()[idx])
    lhs = eps**2 * tail_mass(model, eps) + truncated_moment(model, eps, 2) + sigma2
    assert lhs == truncated_variance(model, eps)


# --- Variance-Gamma and subordination --------------------------------------


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.5, 0.7), (0.3, 4.0)])
@pytest.mark.parametrize("u", [0.1, 1.0, 10.0])
def test_gamma_laplace_exponent_against_transform(a, b, u):
    # E exp(-u A_1) for A_1 ~ Gamma(shape a, rate b); s = w^(1/a) removes the
    # s^(a-1) singularity at the origin
    with mp.workdps(30):
        f = lambda w: mp.exp(-(b + u) * w ** (1 / a)) * b**a / (a * mp.gamma(a))
        transform = mp.quad(f, [0, 1, mp.inf])
    phi = float(GammaJumps(a, b).laplace_exponent(u))
    assert phi == pytest.approx(float(-mp.log(transform)), rel=1e-8)
    assert float(GammaSubordinator(a, b).laplace_exponent(u)) == pytest.approx(phi, rel=1e-14)


@pytest.mark.parametrize("mu", [0.0, 0.5, -1.2])
@pytest.mark.parametrize("x", [1e-3, 0.1, 0.7])
def test_variance_gamma_density_by_subordination(mu, x):
    a, b, sigma = 1.3, 0.8, 0.9
    gauss = lambda y, s: mp.exp(-((y - mu * s) ** 2) / (2 * sigma**2 * s)) / mp.sqrt(2 * mp.pi * sigma**2 * s)
    for side in (1, -1):
        y = side * x
        want = mp.quad(lambda s: gauss(y, s) * a / s * mp.exp(-b * s), [0, x * x, 1, mp.inf])
        got = float(GammaJumps(a, b, mu, sigma).density(x, side))
        assert got == pytest.approx(float(want), rel=1e-8)


def test_subordinated_gamma_is_variance_gamma_at_nodes():
    sub = SubordinatedBM(GammaSubordinator(1.0, 1.0), 1.0)
    vg = GammaJumps(1.0, 1.0, 0.0, 1.0)
    nodes = sub.x[::37]
    assert np.allclose(sub.density(nodes, 1), vg.density(nodes, 1), rtol=1e-9)


def test_tabulated_exact_on_power_law():
    x = np.logspace(-8, 0, 33)
    tab = LevyModel(0.0, 0.0, Tabulated(x, x**-2.2, x**-2.2))
    ref = LevyModel(0.0, 0.0, TwoSidedPolynomial(1.0, 1.2, 1.0, 1.2))
    for eps in (1e-6, 1e-3, 0.2):
        assert tail_mass(tab, eps) == pytest.approx(tail_mass(ref, eps), rel=1e-9)
        assert truncated_moment(tab, eps, 2) == pytest.approx(truncated_moment(ref, eps, 2), rel=1e-9)


def test_family_invariants():
    with pytest.raises(DomainError):
        TwoSidedPolynomial(0.0, 1.0)
    with pytest.raises(DomainError):
        TwoSidedPolynomial(1.0, 2.0)
    with pytest.raises(DomainError):
        TwoSidedPolynomial(1.0, 1.0, 1.0, 1.5)
    with pytest.raises(DomainError):
        LevyModel(0.0, -1.0)


# --- jump sampling ----------------------------------------------------------


def test_sample_jumps_trivial():
    assert sample_jumps(BROWNIAN, 0.1, 1.0, 3) == []
    assert sample_jumps(SYM1, 1 - 1e-15, 1.0, 3) == []


def test_sample_jumps_sorted_and_bounded():
    jumps = sample_jumps(SYM1, 0.05, 2.0, RandomStream(11))
    times = [t for t, _ in jumps]
    assert times == sorted(times)
    assert all(0 <= t <= 2.0 and 0.05 < abs(x) <= 1 for t, x in jumps)


def test_jump_count_mean():
    n = 100_000
    counts, _, _ = sample_jump_batch(SYM1, 0.5, 1.0, n, RandomStream(5))
    assert abs(counts.mean() - 2.0) <= 3 * math.sqrt(2.0 / n)


def test_jump_batch_prefix_stable():
    a = sample_jump_batch(SYM1, 0.1, 1.0, 50, RandomStream(2))
    b = sample_jump_batch(SYM1, 0.1, 1.0, 80, RandomStream(2))
    k = int(a[0].sum())
    assert np.array_equal(a[0], b[0][:50])
    assert np.array_equal(a[1], b[1][:k])
    assert np.array_equal(a[2], b[2][:k])


@pytest.mark.parametrize(
    "name,delta",
    [("symmetric_polynomial", 0.05), ("one_sided_15", 0.01), ("log_polynomial", 0.02), ("variance_gamma_drift", 0.01)],
)
def test_jump_sizes_goodness_of_fit(name, delta):
    model = catalog.get(name)
    sampler = JumpSizeSampler(model, delta)
    sizes = sampler.sample(4000, np.random.Generator(np.random.Philox(17)))
    assert np.all((np.abs(sizes) > delta) & (np.abs(sizes) <= 1))
    total = tail_mass(model, delta)

    def cdf(xs):
        out = []
        for x in np.atleast_1d(xs):
            if x < 0:
                # Pi([-1, x]) for x <= -delta
                m = outer_side(model, -1, max(-x, delta))
                out.append(m / total)
            else:
                neg = outer_side(model, -1, delta)
                pos_above = outer_side(model, 1, max(x, delta))
                out.append((neg + outer_side(model, 1, delta) - pos_above) / total)
        return np.array(out)

    res = stats.kstest(sizes, cdf)
    assert res.pvalue > 1e-3


def outer_side(model, side, eps):
    from levy_lil.levy_model import side_tail

    return side_tail(model, side, eps) if eps < 1 else 0.0
