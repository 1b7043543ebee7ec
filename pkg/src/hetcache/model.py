"""Domain types shared by every module: network parameters, file popularity,
and the two representations of a random caching design.

File indices are 0-based throughout the library. Per-file caching
probabilities ("marginals") live on the capped simplex
``{t : 0 <= t_n <= 1, sum(t) = K}``; small instances may instead carry an
explicit probability distribution over K-subsets of files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from itertools import combinations
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "NetworkConfig",
    "PopularityModel",
    "CachingMarginals",
    "CombinationDistribution",
    "validate_config",
    "marginals_from_combinations",
    "load_config",
]

#: Largest number of K-subsets for which an explicit combination
#: distribution may be constructed. Larger instances must use marginals.
MAX_COMBINATIONS = 10**6

_SUM_TOL = 1e-12
_BUDGET_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NetworkConfig:
    """Physical-layer parameters of the two-tier network.

    Densities are per square meter, powers in watts, bandwidth in Hz and
    the target rate in bit/s. ``n0`` is the noise power evaluated over the
    entire band. Success thresholds depend on rate and bandwidth only
    through ``tau / w``.
    """

    lambda1: float
    lambda2: float
    lambda_u: float
    p1: float
    p2: float
    alpha: float
    w: float
    tau: float
    n0: float
    n_files: int
    k1: int
    k2: int

    @property
    def sigma1(self) -> float:
        """Power ratio P1/P2."""
        return self.p1 / self.p2

    @property
    def sigma2(self) -> float:
        """Power ratio P2/P1."""
        return self.p2 / self.p1

    def density(self, tier: int) -> float:
        return self.lambda1 if tier == 1 else self.lambda2

    def power(self, tier: int) -> float:
        return self.p1 if tier == 1 else self.p2

    def cache_size(self, tier: int) -> int:
        return self.k1 if tier == 1 else self.k2

    def replace(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


def other_tier(tier: int) -> int:
    if tier not in (1, 2):
        raise ValueError(f"tier must be 1 or 2, got {tier}")
    return 3 - tier


@dataclass(frozen=True)
class PopularityModel:
    """File request probabilities ``a`` with ``a_n`` in (0,1), summing to 1."""

    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _readonly(self.a))
        a = self.a
        if a.ndim != 1 or a.size < 2:
            raise ValueError("popularity vector must be 1-D with at least 2 entries")
        if np.any(a <= 0.0) or np.any(a >= 1.0):
            raise ValueError("each popularity must lie strictly in (0,1)")
        if abs(float(a.sum()) - 1.0) > _SUM_TOL:
            raise ValueError(f"popularities must sum to 1 (got {a.sum()!r})")

    @property
    def n_files(self) -> int:
        return int(self.a.size)

    @classmethod
    def zipf(cls, n_files: int, gamma: float) -> "PopularityModel":
        """Zipf popularity ``a_n ∝ n^-gamma`` over ranks ``n = 1..N``.

        ``gamma > 0`` yields strictly decreasing popularities; ``gamma = 0``
        degenerates to the uniform vector (allowed, but with ties).
        """
        if gamma < 0:
            raise ValueError("zipf exponent must be >= 0")
        ranks = np.arange(1, n_files + 1, dtype=float)
        weights = ranks**-gamma
        return cls(weights / weights.sum())

    @classmethod
    def explicit(cls, a: Iterable[float]) -> "PopularityModel":
        return cls(np.asarray(list(a), dtype=float))


@dataclass(frozen=True)
class CachingMarginals:
    """Per-file caching probabilities of one tier, on the capped simplex."""

    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", _readonly(self.t))
        t = self.t
        if t.ndim != 1:
            raise ValueError("marginals must be a 1-D vector")
        if np.any(t < -_BUDGET_TOL) or np.any(t > 1.0 + _BUDGET_TOL):
            raise ValueError("marginals must lie in [0,1]")
        total = float(t.sum())
        budget = round(total)
        if abs(total - budget) > _BUDGET_TOL or not 0 <= budget <= t.size:
            raise ValueError(
                f"marginals must sum to an integer cache size in [0,N] (got sum {total!r})"
            )
        object.__setattr__(self, "_budget", int(budget))

    @property
    def budget(self) -> int:
        """Cache size K implied by the (near-integer) sum of the vector."""
        return self._budget

    @property
    def n_files(self) -> int:
        return int(self.t.size)

    @classmethod
    def uniform(cls, n_files: int, k: int) -> "CachingMarginals":
        return cls(np.full(n_files, k / n_files))


@dataclass(frozen=True)
class CombinationDistribution:
    """Explicit probability distribution over K-subsets of files.

    ``subsets`` holds 0-based file indices; every subset has exactly ``k``
    distinct entries. Only valid for instances with at most
    ``MAX_COMBINATIONS`` possible subsets.
    """

    n_files: int
    k: int
    subsets: tuple
    probs: np.ndarray

    def __post_init__(self):
        if not (1 <= self.k < self.n_files):
            raise ValueError("need 1 <= k < n_files")
        if math.comb(self.n_files, self.k) > MAX_COMBINATIONS:
            raise ValueError(
                "instance too large for explicit combinations; use CachingMarginals"
            )
        subsets = tuple(tuple(sorted(int(i) for i in s)) for s in self.subsets)
        object.__setattr__(self, "subsets", subsets)
        object.__setattr__(self, "probs", _readonly(self.probs))
        probs = self.probs
        if len(subsets) != probs.size:
            raise ValueError("subsets and probs must have equal length")
        for s in subsets:
            if len(set(s)) != self.k:
                raise ValueError(f"subset {s} does not have {self.k} distinct files")
            if s[0] < 0 or s[-1] >= self.n_files:
                raise ValueError(f"subset {s} has file indices outside [0,{self.n_files})")
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ValueError("combination probabilities must lie in [0,1]")
        if abs(float(probs.sum()) - 1.0) > _SUM_TOL:
            raise ValueError("combination probabilities must sum to 1")

    @classmethod
    def uniform(cls, n_files: int, k: int) -> "CombinationDistribution":
        """Uniform distribution over all C(n_files, k) subsets."""
        subs = tuple(combinations(range(n_files), k))
        p = np.full(len(subs), 1.0 / len(subs))
        return cls(n_files=n_files, k=k, subsets=subs, probs=p)

    def subset_array(self) -> np.ndarray:
        """Subsets as an (n_subsets, k) integer array."""
        return np.asarray(self.subsets, dtype=np.int64)


def marginals_from_combinations(
    dist: CombinationDistribution, n_files: int | None = None
) -> CachingMarginals:
    """Per-file marginals ``t_n = sum of probabilities of subsets containing n``.

    The result always sums to exactly K since each subset contributes its
    probability to K distinct files.
    """
    if n_files is not None and n_files != dist.n_files:
        raise ValueError("n_files disagrees with the distribution")
    t = np.zeros(dist.n_files)
    for subset, p in zip(dist.subsets, dist.probs):
        t[list(subset)] += p
    return CachingMarginals(t)


def validate_config(cfg: NetworkConfig, pop: PopularityModel | None = None) -> list[str]:
    """Collect every violated invariant as a message; empty list means ok."""
    errors: list[str] = []
    if not cfg.alpha > 2:
        errors.append(f"alpha must exceed 2 (got {cfg.alpha})")
    if not cfg.lambda1 > 0:
        errors.append("lambda1 must be positive")
    if not cfg.lambda2 > 0:
        errors.append("lambda2 must be positive")
    if cfg.lambda_u < 0:
        errors.append("lambda_u must be nonnegative")
    if not cfg.p1 > 0:
        errors.append("p1 must be positive")
    if not cfg.p2 > 0:
        errors.append("p2 must be positive")
    if not cfg.w > 0:
        errors.append("bandwidth w must be positive")
    if cfg.tau < 0:
        errors.append("target rate tau must be nonnegative")
    if cfg.n0 < 0:
        errors.append("noise power n0 must be nonnegative")
    if cfg.n_files < 2:
        errors.append("need at least 2 files")
    for name, k in (("k1", cfg.k1), ("k2", cfg.k2)):
        if not isinstance(k, (int, np.integer)) or k < 1:
            errors.append(f"{name} must be an integer >= 1")
        elif k >= cfg.n_files:
            errors.append(f"{name}: cache size must be < N (got {k} with N={cfg.n_files})")
    if pop is not None:
        if pop.n_files != cfg.n_files:
            errors.append(
                f"popularity vector length {pop.n_files} does not match n_files {cfg.n_files}"
            )
    return errors


def load_config(path: str | Path) -> tuple[NetworkConfig, PopularityModel]:
    """Read a flat JSON config into a validated (NetworkConfig, PopularityModel).

    Keys match the NetworkConfig field names, plus ``popularity`` which is
    either ``{"zipf": gamma}`` or ``{"explicit": [a_1, ..., a_N]}``.
    The noise power may be given directly as ``n0`` or as ``snr_db``
    (interpreted as P2/N0 in dB and converted once here).
    """
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    data = dict(raw)
    pop_spec = data.pop("popularity", None)
    if pop_spec is None:
        raise ValueError("config is missing the 'popularity' entry")
    if "snr_db" in data:
        if "n0" in data:
            raise ValueError("give either n0 or snr_db, not both")
        snr_db = float(data.pop("snr_db"))
        data["n0"] = float(data["p2"]) * 10.0 ** (-snr_db / 10.0)
    field_names = set(NetworkConfig.__dataclass_fields__)
    unknown = set(data) - field_names
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    missing = field_names - set(data)
    if missing:
        raise ValueError(f"missing config keys: {sorted(missing)}")
    for name in ("n_files", "k1", "k2"):
        data[name] = int(data[name])
    for name in field_names - {"n_files", "k1", "k2"}:
        data[name] = float(data[name])
    cfg = NetworkConfig(**data)

    if isinstance(pop_spec, dict) and "zipf" in pop_spec:
        pop = PopularityModel.zipf(cfg.n_files, float(pop_spec["zipf"]))
    elif isinstance(pop_spec, dict) and "explicit" in pop_spec:
        pop = PopularityModel.explicit(pop_spec["explicit"])
    else:
        raise ValueError("popularity must be {'zipf': gamma} or {'explicit': [..]}")

    errors = validate_config(cfg, pop)
    if errors:
        raise ValueError("invalid config: " + "; ".join(errors))
    return cfg, pop
