"""Monte Carlo estimation of the STP, independent of the analytic formulas.

Each trial drops both POA tiers and the user field as Poisson point
processes on a toroidal square window, realizes an independent cache per
POA, places the typical user at the window center, and plays out the
association, multicast load and SINR test directly from their
definitions. Trials derive independent RNG streams from (master seed,
trial index), so estimates are bit-reproducible for any worker count.

The per-trial association scan that determines the multicast load is the
hot kernel; a compiled extension is used when available, with a
vectorized numpy fallback selected at import.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..model import (
    CachingMarginals,
    CombinationDistribution,
    NetworkConfig,
    PopularityModel,
)
from . import _kernel_py

try:  # compiled kernel is optional; the numpy fallback is always present
    from . import _kernel as _kernel_cy
except ImportError:  # pragma: no cover - depends on the build
    _kernel_cy = None

__all__ = [
    "SimWindow",
    "TrialOutcome",
    "StpEstimate",
    "SimulationResult",
    "available_backends",
    "default_backend",
    "sample_ppp",
    "sample_cache",
    "simulate_trial",
    "estimate_stp",
]

MAX_EXPECTED_USERS = 1e6
MIN_EXPECTED_POAS = 200.0

TierDesign = CachingMarginals | CombinationDistribution


def available_backends() -> tuple[str, ...]:
    return ("cython", "numpy") if _kernel_cy is not None else ("numpy",)


def default_backend() -> str:
    return available_backends()[0]


def _kernel_module(backend: str | None):
    name = backend or default_backend()
    if name == "cython":
        if _kernel_cy is None:
            raise ValueError("compiled kernel is not available in this install")
        return _kernel_cy
    if name == "numpy":
        return _kernel_py
    raise ValueError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class SimWindow:
    """Square toroidal window of side length ``side`` meters."""

    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("window side must be positive")

    @property
    def area(self) -> float:
        return self.side * self.side

    @classmethod
    def for_config(cls, cfg: NetworkConfig) -> "SimWindow":
        """Smallest window whose sparser tier still averages 200 POAs."""
        side = max(
            math.sqrt(MIN_EXPECTED_POAS / cfg.lambda1),
            math.sqrt(MIN_EXPECTED_POAS / cfg.lambda2),
        )
        return cls(side)


@dataclass(frozen=True)
class TrialOutcome:
    """Result of a single deployment draw for the typical user."""

    requested: int
    served: bool
    tier: int  # 0 when unserved
    load: int  # 0 when unserved
    sinr: float  # nan when unserved
    success: bool


@dataclass(frozen=True)
class StpEstimate:
    mean: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int


@dataclass(frozen=True)
class SimulationResult:
    """STP estimate with per-tier breakdown and the protocol metadata
    (window, trial count, seed, backend) needed to reproduce it."""

    total: StpEstimate
    tier1: StpEstimate
    tier2: StpEstimate
    window: SimWindow
    trials: int
    seed: int
    backend: str


def sample_ppp(window: SimWindow, density: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP sample: Poisson count, uniform positions in the window."""
    if density < 0:
        raise ValueError("density must be nonnegative")
    count = rng.poisson(density * window.area)
    return rng.random((count, 2)) * window.side


def _intervals_select(cum: np.ndarray, k: int, u: np.ndarray) -> np.ndarray:
    """Interval-method cache draw: one uniform per cache, K files each.

    Lays intervals of length t_n end to end over [0, K); cache ``i``
    selects the files whose intervals contain u_i + m for m = 0..K-1.
    Intervals never exceed unit length and the probe points are unit
    spaced, so the K selected files are distinct and file n is selected
    with probability exactly t_n.
    """
    points = np.asarray(u)[:, None] + np.arange(k)[None, :]
    idx = np.searchsorted(cum, points.ravel(), side="right").reshape(points.shape)
    return np.minimum(idx, cum.size - 1)


def sample_cache(
    design: TierDesign, k: int | None = None, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Draw one cache realization: a sorted array of K distinct file indices.

    For marginals the interval method realizes the per-file probabilities
    exactly; for an explicit combination distribution the subset index is
    drawn categorically.
    """
    if rng is None:
        raise ValueError("an rng stream is required")
    if isinstance(design, CombinationDistribution):
        if k is not None and k != design.k:
            raise ValueError("k disagrees with the combination distribution")
        cum = np.cumsum(design.probs)
        i = min(
            int(np.searchsorted(cum, rng.random(), side="right")), len(design.subsets) - 1
        )
        return np.array(design.subsets[i], dtype=np.int64)
    if isinstance(design, CachingMarginals):
        kk = design.budget if k is None else k
        if kk != design.budget:
            raise ValueError("k disagrees with the marginals budget")
        cum = np.cumsum(design.t)
        idx = _intervals_select(cum, kk, np.array([rng.random()]))[0]
        return np.sort(idx.astype(np.int64))
    raise TypeError("design must be CachingMarginals or CombinationDistribution")


def _normalize_design(design: TierDesign, cfg: NetworkConfig, tier: int):
    k = cfg.cache_size(tier)
    if isinstance(design, CombinationDistribution):
        if design.n_files != cfg.n_files or design.k != k:
            raise ValueError(f"tier {tier} design does not match the config")
        return ("comb", np.cumsum(design.probs), design.subset_array())
    if isinstance(design, CachingMarginals):
        if design.n_files != cfg.n_files or design.budget != k:
            raise ValueError(f"tier {tier} design does not match the config")
        return ("marg", np.cumsum(design.t), k)
    raise TypeError("design must be CachingMarginals or CombinationDistribution")


def _realize_caches(norm, n_files: int, u: np.ndarray) -> np.ndarray:
    """Cache membership matrix (n_caches, n_files) from one uniform per cache."""
    kind = norm[0]
    cache = np.zeros((u.size, n_files), dtype=bool)
    if u.size == 0:
        return cache
    if kind == "comb":
        _, cum, subsets = norm
        ci = np.minimum(
            np.searchsorted(cum, u, side="right"), subsets.shape[0] - 1
        )
        picked = subsets[ci]
    else:
        _, cum, k = norm
        picked = _intervals_select(cum, k, u)
    cache[np.arange(u.size)[:, None], picked] = True
    return cache


def _toroidal_d2(points: np.ndarray, ref: np.ndarray, box: float) -> np.ndarray:
    delta = np.abs(points - ref)
    delta = np.minimum(delta, box - delta)
    return (delta * delta).sum(axis=-1)


def _simulate_one(
    cfg: NetworkConfig,
    cum_a: np.ndarray,
    norm1,
    norm2,
    window: SimWindow,
    rng: np.random.Generator,
    kernel,
) -> TrialOutcome:
    box = window.side
    n1 = rng.poisson(cfg.lambda1 * window.area)
    n2 = rng.poisson(cfg.lambda2 * window.area)
    pos = rng.random((n1 + n2, 2)) * box
    u_cache = rng.random(n1 + n2)
    requested = min(
        int(np.searchsorted(cum_a, rng.random(), side="right")), cum_a.size - 1
    )
    n_users = rng.poisson(cfg.lambda_u * window.area)
    user_req = np.minimum(
        np.searchsorted(cum_a, rng.random(n_users), side="right"), cum_a.size - 1
    )
    fading = rng.standard_exponential(n1 + n2)

    cache = np.vstack(
        [
            _realize_caches(norm1, cfg.n_files, u_cache[:n1]),
            _realize_caches(norm2, cfg.n_files, u_cache[n1:]),
        ]
    )
    cachers = cache[:, requested]
    if not cachers.any():
        return TrialOutcome(requested, False, 0, 0, math.nan, False)

    power = np.concatenate([np.full(n1, cfg.p1), np.full(n2, cfg.p2)])
    center = np.array([box / 2.0, box / 2.0])
    d2 = _toroidal_d2(pos, center, box)
    with np.errstate(divide="ignore"):
        received = power * d2 ** (-cfg.alpha / 2.0)
    serving = int(np.argmax(np.where(cachers, received, -np.inf)))
    tier = 1 if serving < n1 else 2

    env = received * fading
    noise_plus_interf = float(env.sum()) - float(env[serving]) + cfg.n0
    sinr = float(env[serving]) / noise_plus_interf

    slots = np.flatnonzero(cache[serving])
    slots = slots[slots != requested]
    extra = 0
    if slots.size and n_users:
        slot_of_file = np.full(cfg.n_files, -1, dtype=np.int64)
        slot_of_file[slots] = np.arange(slots.size)
        user_slot = slot_of_file[user_req]
        cand = user_slot >= 0
        user_pos = rng.random((int(cand.sum()), 2)) * box
        if user_pos.shape[0]:
            loaded = kernel.load_slots(
                pos,
                power,
                np.ascontiguousarray(cache[:, slots]).view(np.uint8),
                serving,
                user_pos,
                user_slot[cand],
                box,
                cfg.alpha,
            )
            extra = int(loaded.sum())
    load = 1 + extra
    assert load <= cfg.cache_size(tier)
    threshold = math.expm1(load * cfg.tau / cfg.w * math.log(2.0))
    success = sinr >= threshold
    return TrialOutcome(requested, True, tier, load, sinr, success)


def simulate_trial(
    cfg: NetworkConfig,
    pop: PopularityModel,
    design1: TierDesign,
    design2: TierDesign,
    window: SimWindow,
    rng: np.random.Generator,
    backend: str | None = None,
) -> TrialOutcome:
    """Run one independent deployment trial and test the typical user's request."""
    kernel = _kernel_module(backend)
    return _simulate_one(
        cfg,
        np.cumsum(pop.a),
        _normalize_design(design1, cfg, 1),
        _normalize_design(design2, cfg, 2),
        window,
        rng,
        kernel,
    )


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(index))))


def _estimate(mean_count: int, trials: int, seed: int) -> StpEstimate:
    mean = mean_count / trials
    half = 1.96 * math.sqrt(max(mean * (1.0 - mean), 0.0) / trials)
    return StpEstimate(mean, max(mean - half, 0.0), min(mean + half, 1.0), trials, seed)


def estimate_stp(
    cfg: NetworkConfig,
    pop: PopularityModel,
    design1: TierDesign,
    design2: TierDesign,
    window: SimWindow | None = None,
    trials: int = 20000,
    seed: int = 0,
    jobs: int = 1,
    backend: str | None = None,
) -> SimulationResult:
    """Estimate the STP (with per-tier breakdown) over independent trials.

    Every trial draws its RNG stream from (seed, trial index), and the
    aggregation is an order-independent sum of indicators, so the result
    is identical for any ``jobs`` value.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if window is None:
        window = SimWindow.for_config(cfg)
    for name, lam in (("lambda1", cfg.lambda1), ("lambda2", cfg.lambda2)):
        if lam * window.area < MIN_EXPECTED_POAS:
            raise ValueError(
                f"window too small: expected {name} POA count below {MIN_EXPECTED_POAS}"
            )
    if cfg.lambda_u * window.area > MAX_EXPECTED_USERS:
        raise ValueError("window too large: expected user count exceeds 1e6")

    kernel = _kernel_module(backend)
    backend_name = backend or default_backend()
    cum_a = np.cumsum(pop.a)
    norm1 = _normalize_design(design1, cfg, 1)
    norm2 = _normalize_design(design2, cfg, 2)

    def run_block(start: int, stop: int) -> np.ndarray:
        counts = np.zeros(3, dtype=np.int64)  # successes: total, tier1, tier2
        for i in range(start, stop):
            out = _simulate_one(cfg, cum_a, norm1, norm2, window, _trial_rng(seed, i), kernel)
            if out.success:
                counts[0] += 1
                counts[out.tier] += 1
        return counts

    if jobs <= 1:
        counts = run_block(0, trials)
    else:
        bounds = np.linspace(0, trials, jobs + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(run_block, bounds[:-1], bounds[1:])
            counts = sum(parts, np.zeros(3, dtype=np.int64))

    return SimulationResult(
        total=_estimate(int(counts[0]), trials, seed),
        tier1=_estimate(int(counts[1]), trials, seed),
        tier2=_estimate(int(counts[2]), trials, seed),
        window=window,
        trials=trials,
        seed=seed,
        backend=backend_name,
    )
