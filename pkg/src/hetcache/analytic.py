"""Closed-form and quadrature-based performance expressions.

The successful-transmission probability (STP) of the typical user is
evaluated two ways:

* ``stp_general`` — the general-regime expression: per-file association
  weights, a file-load p.m.f. driven by moment-matched cell-size
  statistics, and a noise-aware coverage integral ``f_jk`` per load level.
* ``stp_asymptotic`` — the high-SNR, high-user-density limit, where the
  STP collapses to a ratio of caching probabilities weighted by the
  interference geometry coefficients ``theta``.

Tier arguments are 1 or 2. All file vectors are indexed 0..N-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .model import (
    CachingMarginals,
    CombinationDistribution,
    NetworkConfig,
    PopularityModel,
    marginals_from_combinations,
    other_tier,
)
from .special import beta_fn

__all__ = [
    "ThetaCoefficients",
    "LoadPmf",
    "StpBreakdown",
    "theta_coeffs",
    "association_prob",
    "b_coeff",
    "poisson_binomial_pmf",
    "load_pmf",
    "f_jk",
    "stp_general",
    "stp_asymptotic",
    "grad_asymptotic",
    "asymptotic_params",
    "AsymptoticParams",
]

_LN2 = math.log(2.0)

#: Upper truncation of the substituted coverage integral; the integrand is
#: bounded by exp(-s), so the discarded tail is below 1e-17.
_QUAD_CUTOFF = 40.0
_QUAD_REL_TOL = 1e-9
_QUAD_MAX_DEPTH = 60


@dataclass(frozen=True)
class ThetaCoefficients:
    """Interference geometry constants for one (tier, load) pair."""

    theta1: float
    theta2: float
    theta3: float


@dataclass(frozen=True)
class LoadPmf:
    """Distribution of the serving POA's file load, ``probs[k-1] = P(load=k)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if np.any(p < -1e-12) or abs(float(p.sum()) - 1.0) > 1e-10:
            raise ValueError("load p.m.f. entries must be nonnegative and sum to 1")


@dataclass(frozen=True)
class StpBreakdown:
    """Total STP and its per-tier components (q_total = q_tier1 + q_tier2)."""

    q_total: float
    q_tier1: float
    q_tier2: float


def _rate_growth(cfg: NetworkConfig, k: int) -> float:
    """SINR threshold 2^(k*tau/w) - 1 for a load of k files."""
    return math.expm1(k * cfg.tau / cfg.w * _LN2)


def theta_coeffs(cfg: NetworkConfig, tier: int, k: int) -> ThetaCoefficients:
    """Coefficients (theta1, theta2_j, theta3_j) for serving tier ``tier`` at load ``k``.

    Built from Beta-function integrals of the path-loss law. ``theta1``
    must come out positive for the closed-form caching optimizers to
    apply; a nonpositive value raises.
    """
    if not 1 <= k <= cfg.cache_size(tier):
        raise ValueError(f"load k={k} outside [1, K_{tier}]")
    jbar = other_tier(tier)
    x = 2.0 / cfg.alpha
    growth = _rate_growth(cfg, k)
    # rho = (lambda_jbar / lambda_j) * (P_jbar / P_j)^(2/alpha)
    rho = (
        cfg.density(jbar)
        / cfg.density(tier)
        * (cfg.power(jbar) / cfg.power(tier)) ** x
    )
    b_complete = beta_fn(x, 1.0 - x)
    # B'(x,y,z) - B(x,y) = -int_0^z u^(x-1)(1-u)^(y-1) du; the lower tail is
    # evaluated through the regularized incomplete beta to avoid cancellation.
    z = 2.0 ** (-(k * cfg.tau / cfg.w))
    lower_tail = b_complete * float(_sp.betainc(x, 1.0 - x, z))
    head = x * growth**x
    theta1 = 1.0 - head * lower_tail
    theta2 = rho * theta1
    theta3 = (1.0 + rho) * head * b_complete
    if cfg.tau > 0 and theta1 <= 0:
        raise ValueError(
            f"theta1 = {theta1} is not positive for tier {tier}, load {k}; "
            "the closed-form expressions assume theta1 > 0"
        )
    return ThetaCoefficients(theta1, theta2, theta3)


def association_prob(
    cfg: NetworkConfig, tier: int, t_jn: float, t_jbarn: float
) -> float:
    """Probability that a user requesting a file with caching probabilities
    (t_jn, t_jbarn) is associated with ``tier``.

    Returns 0 by convention when the file is cached nowhere.
    """
    jbar = other_tier(tier)
    own = cfg.density(tier) * t_jn
    cross = (
        cfg.density(jbar)
        * t_jbarn
        * (cfg.power(jbar) / cfg.power(tier)) ** (2.0 / cfg.alpha)
    )
    if own + cross == 0.0:
        return 0.0
    return own / (own + cross)


def b_coeff(
    cfg: NetworkConfig,
    pop: PopularityModel,
    tier: int,
    m: int,
    t_jm: float,
    t_jbarm: float,
) -> float:
    """Probability that no user associated with the serving POA requests file ``m``.

    Uses the 3.5-parameter moment-matched Voronoi cell-size model; the
    association weight enters through A-hat = lambda_j / (lambda_j T_jm +
    lambda_jbar T_jbarm (P_jbar/P_j)^(2/alpha)).
    """
    jbar = other_tier(tier)
    lam = cfg.density(tier)
    denom = lam * t_jm + cfg.density(jbar) * t_jbarm * (
        cfg.power(jbar) / cfg.power(tier)
    ) ** (2.0 / cfg.alpha)
    if denom <= 0:
        raise ValueError("file must be cachable somewhere (t_jm + t_jbarm > 0)")
    a_hat = lam / denom
    return (1.0 + pop.a[m] * cfg.lambda_u * a_hat / (3.5 * lam)) ** -3.5


def poisson_binomial_pmf(success_probs: np.ndarray) -> np.ndarray:
    """P.m.f. of the number of successes among independent Bernoulli trials.

    O(n^2) dynamic programming on the generating-polynomial coefficients;
    returns a vector of length ``len(success_probs) + 1``.
    """
    probs = np.asarray(success_probs, dtype=float)
    pmf = np.array([1.0])
    for p in probs:
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] = pmf * (1.0 - p)
        nxt[1:] += pmf * p
        pmf = nxt
    return pmf


def _b_values(
    cfg: NetworkConfig,
    pop: PopularityModel,
    tier: int,
    t_self: np.ndarray,
    t_other: np.ndarray,
) -> np.ndarray:
    """Vector of b coefficients for every file with t_self > 0 (NaN elsewhere)."""
    out = np.full(t_self.size, np.nan)
    for m in range(t_self.size):
        if t_self[m] + t_other[m] > 0:
            out[m] = b_coeff(cfg, pop, tier, m, t_self[m], t_other[m])
    return out


def _load_pmf_arrays(
    cfg: NetworkConfig,
    tier: int,
    dist: CombinationDistribution,
    t_self: np.ndarray,
    b: np.ndarray,
    n: int,
) -> np.ndarray:
    k_cache = cfg.cache_size(tier)
    t_n = t_self[n]
    if t_n <= 0:
        raise ValueError(f"tier {tier} cannot serve file {n}: marginal is 0")
    probs = np.zeros(k_cache)
    for subset, p in zip(dist.subsets, dist.probs):
        if p == 0.0 or n not in subset:
            continue
        others = [m for m in subset if m != n]
        pmf = poisson_binomial_pmf(1.0 - b[others])
        probs[: pmf.size] += (p / t_n) * pmf
    return probs


def load_pmf(
    cfg: NetworkConfig,
    pop: PopularityModel,
    tier: int,
    dist: CombinationDistribution,
    t_other: CachingMarginals,
    n: int,
) -> LoadPmf:
    """Conditional p.m.f. of the serving POA's file load given it serves file ``n``.

    Mixes, over the combinations containing ``n``, the Poisson-binomial
    distribution of how many of the other cached files are concurrently
    requested. The subset sums are computed by O(K^2) dynamic programming
    rather than explicit subset enumeration.
    """
    if dist.k != cfg.cache_size(tier):
        raise ValueError("distribution cache size disagrees with the config")
    t_self = marginals_from_combinations(dist).t
    b = _b_values(cfg, pop, tier, t_self, t_other.t)
    return LoadPmf(_load_pmf_arrays(cfg, tier, dist, t_self, b, n))


def _adaptive_simpson(f, a: float, b: float, abs_tol: float) -> float:
    """Adaptive Simpson quadrature with a conservative acceptance test."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, abs_tol, 0)]
    total = 0.0
    while stack:
        a0, b0, fa0, fm0, fb0, whole0, tol, depth = stack.pop()
        m = 0.5 * (a0 + b0)
        flm = f(0.5 * (a0 + m))
        frm = f(0.5 * (m + b0))
        left = (m - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        right = (b0 - m) / 6.0 * (fm0 + 4.0 * frm + fb0)
        if abs(left + right - whole0) <= 15.0 * tol:
            total += left + right + (left + right - whole0) / 15.0
        elif depth >= _QUAD_MAX_DEPTH:
            raise RuntimeError("quadrature failed to converge at maximum refinement")
        else:
            stack.append((a0, m, fa0, flm, fm0, left, 0.5 * tol, depth + 1))
            stack.append((m, b0, fm0, frm, fb0, right, 0.5 * tol, depth + 1))
    return total


def _coverage_integral(c: float, half_alpha: float) -> float:
    """int_0^inf exp(-s) * exp(-c * s^half_alpha) ds, truncated at s = 40."""
    if c == 0.0:
        return 1.0

    def integrand(s: float) -> float:
        return math.exp(-s - c * s**half_alpha)

    # Coarse composite-Simpson pass fixes the scale of the tolerance.
    grid = np.linspace(0.0, _QUAD_CUTOFF, 129)
    vals = np.exp(-grid - c * grid**half_alpha)
    h = grid[1] - grid[0]
    coarse = h / 3.0 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum())
    abs_tol = _QUAD_REL_TOL * max(abs(coarse), 1e-300)
    return _adaptive_simpson(integrand, 0.0, _QUAD_CUTOFF, abs_tol)


def f_jk(
    cfg: NetworkConfig,
    tier: int,
    k: int,
    x: float,
    y: float,
    thetas: ThetaCoefficients | None = None,
) -> float:
    """Coverage term for serving tier ``tier`` at load ``k`` and caching
    probabilities ``x`` (own tier) and ``y`` (other tier).

    After substituting s = pi*lambda_j*(theta1 x + theta2 y + theta3) d^2,
    the defining integral becomes
    ``(1/A) * int_0^inf exp(-s) exp(-c s^(alpha/2)) ds`` with
    A the theta combination and c the normalized noise factor; the noise-free
    case reduces exactly to 1/A.
    """
    th = thetas if thetas is not None else theta_coeffs(cfg, tier, k)
    a_comb = th.theta1 * x + th.theta2 * y + th.theta3
    if a_comb <= 0:
        raise ValueError("theta1*x + theta2*y + theta3 must be positive")
    growth = _rate_growth(cfg, k)
    c = (
        growth
        * (cfg.n0 / cfg.power(tier))
        / (math.pi * cfg.density(tier) * a_comb) ** (cfg.alpha / 2.0)
    )
    return _coverage_integral(c, cfg.alpha / 2.0) / a_comb


def _stp_general_tier(
    cfg: NetworkConfig,
    pop: PopularityModel,
    tier: int,
    dist: CombinationDistribution,
    t_self: np.ndarray,
    t_other: np.ndarray,
) -> float:
    k_cache = cfg.cache_size(tier)
    thetas = [theta_coeffs(cfg, tier, k) for k in range(1, k_cache + 1)]
    b = _b_values(cfg, pop, tier, t_self, t_other)
    q = 0.0
    for n in range(cfg.n_files):
        if t_self[n] <= 0:
            continue
        pmf = _load_pmf_arrays(cfg, tier, dist, t_self, b, n)
        fvals = np.array(
            [
                f_jk(cfg, tier, k, t_self[n], t_other[n], thetas[k - 1])
                for k in range(1, k_cache + 1)
            ]
        )
        q += pop.a[n] * t_self[n] * float(pmf @ fvals)
    return q


def stp_general(
    cfg: NetworkConfig,
    pop: PopularityModel,
    dist1: CombinationDistribution,
    dist2: CombinationDistribution,
) -> StpBreakdown:
    """General-regime STP of the typical user under explicit combination
    distributions for both tiers.

    The load and SINR are treated as independent given the serving tier
    (their coupling through the cell geometry is deliberately ignored;
    the Monte Carlo simulator quantifies the resulting error).
    """
    t1 = marginals_from_combinations(dist1).t
    t2 = marginals_from_combinations(dist2).t
    q1 = _stp_general_tier(cfg, pop, 1, dist1, t1, t2)
    q2 = _stp_general_tier(cfg, pop, 2, dist2, t2, t1)
    return StpBreakdown(q1 + q2, q1, q2)


@dataclass(frozen=True)
class AsymptoticParams:
    """Popularity plus per-tier theta coefficients at full load (k = K_j).

    Precomputed once so optimizer inner loops avoid repeated
    special-function evaluations.
    """

    a: np.ndarray
    th1: ThetaCoefficients
    th2: ThetaCoefficients

    def tier(self, tier: int) -> ThetaCoefficients:
        return self.th1 if tier == 1 else self.th2

    def q_tier(self, tier: int, t_self: np.ndarray, t_other: np.ndarray) -> float:
        th = self.tier(tier)
        den = th.theta1 * t_self + th.theta2 * t_other + th.theta3
        num = self.a * t_self
        out = np.divide(num, den, out=np.zeros_like(num), where=t_self > 0)
        return float(out.sum())

    def q_total(self, t1: np.ndarray, t2: np.ndarray) -> float:
        return self.q_tier(1, t1, t2) + self.q_tier(2, t2, t1)

    def grad(self, t1: np.ndarray, t2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Partials of the total asymptotic STP w.r.t. each tier's marginals."""
        den1 = self.th1.theta1 * t1 + self.th1.theta2 * t2 + self.th1.theta3
        den2 = self.th2.theta1 * t2 + self.th2.theta2 * t1 + self.th2.theta3
        g1 = (
            self.a * (self.th1.theta2 * t2 + self.th1.theta3) / den1**2
            - self.a * self.th2.theta2 * t2 / den2**2
        )
        g2 = (
            self.a * (self.th2.theta2 * t1 + self.th2.theta3) / den2**2
            - self.a * self.th1.theta2 * t1 / den1**2
        )
        return g1, g2


def asymptotic_params(cfg: NetworkConfig, pop: PopularityModel) -> AsymptoticParams:
    """Theta coefficients of both tiers at loads K_1, K_2, bundled with ``a``."""
    return AsymptoticParams(
        a=pop.a,
        th1=theta_coeffs(cfg, 1, cfg.k1),
        th2=theta_coeffs(cfg, 2, cfg.k2),
    )


def stp_asymptotic(
    cfg: NetworkConfig,
    pop: PopularityModel,
    t1: CachingMarginals,
    t2: CachingMarginals,
) -> StpBreakdown:
    """High-SNR, high-user-density STP as a function of the marginals alone.

    Files a tier does not cache contribute 0 to that tier by convention,
    even at tau = 0 where the denominator may vanish with them.
    """
    params = asymptotic_params(cfg, pop)
    q1 = params.q_tier(1, t1.t, t2.t)
    q2 = params.q_tier(2, t2.t, t1.t)
    return StpBreakdown(q1 + q2, q1, q2)


def grad_asymptotic(
    cfg: NetworkConfig,
    pop: PopularityModel,
    t1: CachingMarginals,
    t2: CachingMarginals,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the asymptotic STP w.r.t. (t1, t2); requires tau > 0."""
    if cfg.tau <= 0:
        raise ValueError("gradient requires tau > 0")
    return asymptotic_params(cfg, pop).grad(t1.t, t2.t)
