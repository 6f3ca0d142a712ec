"""Named example models used by the tests, the acceptance suite and the CLI."""

from __future__ import annotations

from .levy_model import LevyModel, truncated_moment
from .measures import (
    GammaJumps,
    StableSubordinator,
    SubordinatedBM,
    SymmetricLogPolynomial,
    TwoSidedPolynomial,
)


def variance_gamma_model(a=1.0, b=1.0, mu=0.0, sigma=1.0):
    """sigma B_{A_t} + mu A_t: pure jump, so gamma equals the first moment on [-1, 1]."""
    measure = GammaJumps(a, b, mu, sigma)
    bare = LevyModel(0.0, 0.0, measure)
    return LevyModel(truncated_moment(bare, 1.0, 1), 0.0, measure)


def subordinated_model(subordinator, sigma=1.0):
    measure = SubordinatedBM(subordinator, sigma)
    return LevyModel(0.0, measure.gaussian_variance(), measure)


def _builders():
    return {
        "brownian": lambda: LevyModel(0.0, 1.0),
        "brownian_drift": lambda: LevyModel(0.5, 1.0),
        "symmetric_polynomial": lambda: LevyModel(0.0, 0.0, TwoSidedPolynomial(1.0, 1.0, 1.0, 1.0)),
        "one_sided_15": lambda: LevyModel(0.0, 0.0, TwoSidedPolynomial(1.0, 1.5)),
        "one_sided_05": lambda: LevyModel(0.0, 0.0, TwoSidedPolynomial(1.0, 0.5)),
        "one_sided_05_centered": lambda: LevyModel(2.0, 0.0, TwoSidedPolynomial(1.0, 0.5)),
        # c = 2.02 - 0.01 * 2 = 2
        "drift_dominated": lambda: LevyModel(2.02, 0.0, TwoSidedPolynomial(0.01, 0.5)),
        "brownian_jumps": lambda: LevyModel(0.5, 1.0, TwoSidedPolynomial(1.0, 1.5)),
        "variance_gamma": lambda: variance_gamma_model(),
        "variance_gamma_drift": lambda: variance_gamma_model(mu=0.5),
        "log_polynomial": lambda: LevyModel(0.0, 0.0, SymmetricLogPolynomial(1.5, 1.0)),
        "subordinated_stable": lambda: subordinated_model(StableSubordinator(0.5)),
    }


CATALOG = tuple(_builders())


def get(name):
    try:
        return _builders()[name]()
    except KeyError:
        raise KeyError(f"unknown catalog model {name!r}; known: {', '.join(CATALOG)}") from None
