"""Joint caching design for a single operator.

Three solvers for maximizing the asymptotic STP over the product of
capped simplices:

* ``gradient_projection`` — projected gradient ascent with the diminishing
  stepsize schedule c / (2 + t^0.55); kept as a comparison baseline.
* ``bsum`` — block updates that maximize a tight strictly-concave
  surrogate per tier in closed form (the recommended solver; its
  objective trace is non-decreasing and it converges to a stationary
  point).
* ``equal_cache_optimal`` — the globally optimal design when both tiers
  have the same cache size, via water-filling on the aggregated
  per-file weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytic import AsymptoticParams, asymptotic_params
from .model import CachingMarginals, NetworkConfig, PopularityModel, other_tier

__all__ = [
    "TraceStep",
    "OptimizerTrace",
    "OptimizerResult",
    "project_capped_simplex",
    "gradient_projection",
    "bsum_step",
    "bsum",
    "equal_cache_optimal",
]

#: Bisections stop once the budget residual |sum(T) - K| drops below this.
BUDGET_RESIDUAL_TOL = 1e-10
_MAX_BISECT = 500


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    objective: float
    max_change: float
    active_tier: int  # 0 means both tiers moved in the iteration


@dataclass
class OptimizerTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def append(self, iteration: int, objective: float, max_change: float, active_tier: int):
        self.steps.append(TraceStep(iteration, objective, max_change, active_tier))

    @property
    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.steps])

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class OptimizerResult:
    t1: CachingMarginals
    t2: CachingMarginals
    objective: float
    trace: OptimizerTrace
    status: str  # "converged" | "max-iterations"

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _bisect_budget(sum_fn, lo: float, hi: float, budget: float) -> float:
    """Find nu with sum_fn(nu) = budget; sum_fn is continuous non-increasing.

    Requires sum_fn(lo) >= budget >= sum_fn(hi).
    """
    s_lo = sum_fn(lo)
    s_hi = sum_fn(hi)
    if not (s_lo >= budget - BUDGET_RESIDUAL_TOL and s_hi <= budget + BUDGET_RESIDUAL_TOL):
        raise ValueError(
            f"bisection bracket does not enclose the budget: "
            f"sum({lo})={s_lo}, sum({hi})={s_hi}, budget={budget}"
        )
    nu = 0.5 * (lo + hi)
    for _ in range(_MAX_BISECT):
        nu = 0.5 * (lo + hi)
        s = sum_fn(nu)
        if abs(s - budget) <= BUDGET_RESIDUAL_TOL:
            return nu
        if s > budget:
            lo = nu
        else:
            hi = nu
    return nu


def project_capped_simplex(v: np.ndarray, budget: int) -> CachingMarginals:
    """Euclidean projection of ``v`` onto {T : 0 <= T_n <= 1, sum(T) = budget}.

    The projection has the water-filling form min([v_n - nu]^+, 1) with the
    level nu found by bisection on the (continuous, non-increasing) budget
    residual.
    """
    v = np.asarray(v, dtype=float)
    if not 1 <= budget < v.size:
        raise ValueError("budget must satisfy 1 <= K < N")

    def total(nu: float) -> float:
        return float(np.clip(v - nu, 0.0, 1.0).sum())

    nu = _bisect_budget(total, float(v.min()) - 1.0, float(v.max()), float(budget))
    return CachingMarginals(np.clip(v - nu, 0.0, 1.0))


def _waterfill(
    num: np.ndarray,
    offset: np.ndarray,
    sub: np.ndarray,
    scale: float,
    cap: float,
    budget: float,
) -> np.ndarray:
    """Solve sum_n clip((sqrt(num_n/(nu+offset_n)) - sub_n)/scale, 0, cap) = budget.

    Entries with nu + offset_n <= 0 sit at the cap (the closed form's
    square root diverges there). Returns the optimizing vector.
    """

    def values(nu: float) -> np.ndarray:
        shifted = nu + offset
        out = np.full(num.shape, cap)
        ok = shifted > 0
        out[ok] = np.clip(
            (np.sqrt(num[ok] / shifted[ok]) - sub[ok]) / scale, 0.0, cap
        )
        return out

    # values() reach the cap everywhere at the lower bracket and vanish at
    # the upper one, so the budget (< N*cap) is always enclosed.
    lo = -float(offset.max()) - 1.0
    hi = float((num / sub**2 - offset).max()) + 1.0
    nu = _bisect_budget(lambda x: float(values(x).sum()), lo, hi, budget)
    return values(nu)


def _default_init(cfg: NetworkConfig) -> tuple[CachingMarginals, CachingMarginals]:
    return (
        CachingMarginals.uniform(cfg.n_files, cfg.k1),
        CachingMarginals.uniform(cfg.n_files, cfg.k2),
    )


def _check_feasible(cfg: NetworkConfig, t1: CachingMarginals, t2: CachingMarginals):
    if t1.n_files != cfg.n_files or t2.n_files != cfg.n_files:
        raise ValueError("marginals length must equal n_files")
    if t1.budget != cfg.k1 or t2.budget != cfg.k2:
        raise ValueError("marginals budget must match the configured cache sizes")


def gradient_projection(
    cfg: NetworkConfig,
    pop: PopularityModel,
    init: tuple[CachingMarginals, CachingMarginals] | None = None,
    stepsize_c: float = 500.0,
    tol: float = 1e-9,
    max_iter: int = 10000,
) -> OptimizerResult:
    """Projected gradient ascent with stepsize c / (2 + t^0.55).

    Both tiers move simultaneously from the gradient at the current point,
    then each is projected back onto its capped simplex. Stops when the
    largest per-coordinate change over a full iteration drops to ``tol``.

    With a diminishing stepsize the objective is not guaranteed to be
    monotone per step; the trace records the actual trajectory.
    """
    if init is None:
        init = _default_init(cfg)
    t1, t2 = init
    _check_feasible(cfg, t1, t2)
    params = asymptotic_params(cfg, pop)
    x1, x2 = t1.t.copy(), t2.t.copy()
    trace = OptimizerTrace()
    trace.append(0, params.q_total(x1, x2), np.inf, 0)
    status = "max-iterations"
    for t in range(1, max_iter + 1):
        eps = stepsize_c / (2.0 + t**0.55)
        g1, g2 = params.grad(x1, x2)
        n1 = project_capped_simplex(x1 + eps * g1, cfg.k1).t
        n2 = project_capped_simplex(x2 + eps * g2, cfg.k2).t
        change = max(np.abs(n1 - x1).max(), np.abs(n2 - x2).max())
        x1, x2 = n1, n2
        trace.append(t, params.q_total(x1, x2), change, 0)
        if change <= tol:
            status = "converged"
            break
    return OptimizerResult(
        CachingMarginals(x1),
        CachingMarginals(x2),
        params.q_total(x1, x2),
        trace,
        status,
    )


def _bsum_step_arrays(
    params: AsymptoticParams,
    x_self: np.ndarray,
    x_other: np.ndarray,
    tier: int,
    budget: int,
) -> np.ndarray:
    """Closed-form maximizer of the tier surrogate given the current state."""
    th = params.tier(tier)
    th_o = params.tier(other_tier(tier))
    d = th.theta2 * x_other + th.theta3
    # Penalty from linearizing the other tier's utility at the current point.
    den_o = th_o.theta1 * x_other + th_o.theta2 * x_self + th_o.theta3
    offset = params.a * th_o.theta2 * x_other / den_o**2
    return _waterfill(params.a * d, offset, d, th.theta1, 1.0, float(budget))


def bsum_step(
    cfg: NetworkConfig,
    pop: PopularityModel,
    state: tuple[CachingMarginals, CachingMarginals],
    tier: int,
) -> CachingMarginals:
    """One block update: the unique maximizer of tier ``tier``'s surrogate.

    The surrogate keeps the tier's own concave utility exact and
    linearizes the other tier's utility at the current state; its
    maximizer has a water-filling closed form.
    """
    t1, t2 = state
    _check_feasible(cfg, t1, t2)
    params = asymptotic_params(cfg, pop)
    if tier == 1:
        x = _bsum_step_arrays(params, t1.t, t2.t, 1, cfg.k1)
    else:
        x = _bsum_step_arrays(params, t2.t, t1.t, 2, cfg.k2)
    return CachingMarginals(x)


def bsum(
    cfg: NetworkConfig,
    pop: PopularityModel,
    init: tuple[CachingMarginals, CachingMarginals] | None = None,
    tol: float = 1e-9,
    max_iter: int = 10000,
) -> OptimizerResult:
    """Alternating surrogate maximization over the two tiers.

    Tier j = ((t+1) mod 2) + 1 updates at iteration t. The objective
    sequence is non-decreasing; iteration stops once it changes by at
    most ``tol`` over a full two-tier cycle.
    """
    if init is None:
        init = _default_init(cfg)
    t1, t2 = init
    _check_feasible(cfg, t1, t2)
    params = asymptotic_params(cfg, pop)
    x1, x2 = t1.t.copy(), t2.t.copy()
    objs = [params.q_total(x1, x2)]
    trace = OptimizerTrace()
    trace.append(0, objs[0], np.inf, 0)
    status = "max-iterations"
    for t in range(1, max_iter + 1):
        tier = ((t + 1) % 2) + 1
        if tier == 1:
            new = _bsum_step_arrays(params, x1, x2, 1, cfg.k1)
            change = float(np.abs(new - x1).max())
            x1 = new
        else:
            new = _bsum_step_arrays(params, x2, x1, 2, cfg.k2)
            change = float(np.abs(new - x2).max())
            x2 = new
        objs.append(params.q_total(x1, x2))
        trace.append(t, objs[-1], change, tier)
        if len(objs) >= 3 and abs(objs[-1] - objs[-3]) <= tol:
            status = "converged"
            break
    return OptimizerResult(
        CachingMarginals(x1),
        CachingMarginals(x2),
        objs[-1],
        trace,
        status,
    )


def equal_cache_optimal(cfg: NetworkConfig, pop: PopularityModel) -> OptimizerResult:
    """Globally optimal joint design for K1 = K2.

    With equal cache sizes the objective depends on the designs only
    through the aggregated weights R_n = P1^(2/a) l1 T1n + P2^(2/a) l2 T2n
    and is concave in R. The optimal R is a water-filling profile, mapped
    back by giving both tiers identical marginals R_n / (P1^(2/a) l1 +
    P2^(2/a) l2).
    """
    if cfg.k1 != cfg.k2:
        raise ValueError("equal_cache_optimal requires k1 == k2")
    k = cfg.k1
    params = asymptotic_params(cfg, pop)
    x = 2.0 / cfg.alpha
    w1 = cfg.lambda1 * cfg.p1**x
    w2 = cfg.lambda2 * cfg.p2**x
    r_cap = w1 + w2
    theta1 = params.th1.theta1
    mu3 = w1 * params.th1.theta3
    a = params.a
    n = a.size
    r = _waterfill(
        a * mu3,
        np.zeros(n),
        np.full(n, mu3),
        theta1,
        r_cap,
        r_cap * k,
    )
    t = CachingMarginals(r / r_cap)
    objective = params.q_total(t.t, t.t)
    trace = OptimizerTrace()
    trace.append(0, objective, np.inf, 0)
    return OptimizerResult(t, t, objective, trace, "converged")
