"""Small-deviation rates and Chung-type LIL normings for Levy processes."""

from .errors import *  # noqa: F401,F403
from .levy_model import (
    LevyModel,
    exp_compensated_integral,
    sample_jumps,
    tail_mass,
    tilted_second_moment,
    truncated_moment,
)
from .measures import (
    GammaJumps,
    GammaSubordinator,
    NoJumps,
    StableSubordinator,
    SubordinatedBM,
    SymmetricLogPolynomial,
    Tabulated,
    TwoSidedPolynomial,
)
from .norming import (
    NormingFunction,
    check_b_regularity,
    closed_form_norming,
    invert_rate,
    norming_b,
    stable_constant_bounds,
)
from .rate_function import (
    EsscherSolution,
    RateTable,
    build_rate_table,
    check_condition_M,
    check_esscher_negligible,
    check_flargeru,
    estimate_rv_exponent,
    lambda_eps,
    lambda_eps_prime,
    rate_general,
    rate_symmetric,
    sd_bounds,
    solve_esscher_drift,
    truncated_variance,
)
from .simulate import (
    PathConfig,
    PathSample,
    SmallDevEstimate,
    estimate_small_dev,
    simulate_path,
    simulate_variance_gamma,
    sup_norm_refined,
)
from .streams import RandomStream
from .verify import (
    LiminfReport,
    SandwichReport,
    brownian_ball_probability,
    bv_drift_limit_check,
    lil_liminf_estimate,
    sandwich_check,
)

__version__ = "0.1.0"
