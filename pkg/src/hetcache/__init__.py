"""Random caching designs in two-tier wireless multicast networks:
analytic STP evaluation, joint and competitive caching optimizers, and an
independent Monte Carlo validator."""

from .analytic import (
    LoadPmf,
    StpBreakdown,
    ThetaCoefficients,
    association_prob,
    b_coeff,
    f_jk,
    grad_asymptotic,
    load_pmf,
    poisson_binomial_pmf,
    stp_asymptotic,
    stp_general,
    theta_coeffs,
)
from .baselines import iid_popularity_marginals, most_popular_marginals
from .game import (
    GameResult,
    best_response,
    best_response_dynamics,
    convergence_condition,
    verify_ne,
)
from .model import (
    CachingMarginals,
    CombinationDistribution,
    NetworkConfig,
    PopularityModel,
    load_config,
    marginals_from_combinations,
    validate_config,
)
from .optimize import (
    OptimizerResult,
    OptimizerTrace,
    bsum,
    bsum_step,
    equal_cache_optimal,
    gradient_projection,
    project_capped_simplex,
)
from .sim import (
    SimulationResult,
    SimWindow,
    StpEstimate,
    TrialOutcome,
    estimate_stp,
    sample_cache,
    sample_ppp,
    simulate_trial,
)
from .special import beta_fn, beta_inc_comp

__version__ = "0.1.0"
