"""Reference caching designs used in comparison sweeps."""

from __future__ import annotations

import numpy as np

from .model import CachingMarginals, PopularityModel

__all__ = ["most_popular_marginals", "iid_popularity_marginals"]

#: The exact i.i.d.-popularity computation enumerates ordered draw
#: prefixes; instances whose prefix count exceeds this are refused.
_MAX_PREFIXES = 2 * 10**7


def most_popular_marginals(pop: PopularityModel, k: int) -> CachingMarginals:
    """Deterministic design caching the K most popular files (t_n in {0,1}).

    Ties in popularity are broken toward the lower file index.
    """
    n = pop.n_files
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n_files")
    order = np.argsort(-pop.a, kind="stable")
    t = np.zeros(n)
    t[order[:k]] = 1.0
    return CachingMarginals(t)


def _prefix_count(n: int, k: int) -> float:
    total, block = 0.0, 1.0
    for r in range(k):
        total += block
        block *= n - r
    return total


def _iid_exact(a: np.ndarray, k: int) -> np.ndarray:
    """Inclusion probabilities of popularity-proportional sampling without
    replacement, by enumerating ordered prefixes of the draw sequence.

    P(file n enters at draw r+1) sums, over ordered prefixes S of length r
    that avoid n, the prefix probability times a_n / (1 - a(S)).
    """
    n = a.size
    t = np.zeros(n)
    used = np.zeros(n, dtype=bool)

    def recurse(depth: int, prob: float, remaining: float):
        t[~used] += prob * a[~used] / remaining
        if depth == k - 1:
            return
        for m in range(n):
            if used[m]:
                continue
            used[m] = True
            recurse(depth + 1, prob * a[m] / remaining, remaining - a[m])
            used[m] = False

    recurse(0, 1.0, 1.0)
    return t


def _iid_monte_carlo(
    a: np.ndarray, k: int, draws: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical inclusion frequencies plus their standard errors.

    Sequential popularity-proportional sampling without replacement is
    realized as an exponential race: file n enters the cache iff
    E_n / a_n ranks among the K smallest, with E_n i.i.d. unit
    exponentials. The race draws are shared across files, so frequencies
    sum to exactly K per draw.
    """
    rng = np.random.default_rng(seed)
    n = a.size
    counts = np.zeros(n, dtype=np.int64)
    block = max(1, min(draws, 10**7 // max(n, 1)))
    done = 0
    while done < draws:
        m = min(block, draws - done)
        arrival = rng.standard_exponential((m, n)) / a
        winners = np.argpartition(arrival, k - 1, axis=1)[:, :k]
        np.add.at(counts, winners.ravel(), 1)
        done += m
    freq = counts / draws
    stderr = np.sqrt(np.maximum(freq * (1.0 - freq), 0.0) / draws)
    return freq, stderr


def iid_popularity_marginals(
    pop: PopularityModel,
    k: int,
    method: str = "exact",
    draws: int = 100000,
    seed: int = 0,
    with_stderr: bool = False,
):
    """Marginals of the design that fills each cache by drawing K distinct
    files sequentially with probability proportional to popularity
    (renormalized after every draw).

    ``method="exact"`` enumerates ordered draw prefixes and refuses
    instances where that enumeration is too large; ``method="monte-carlo"``
    estimates the marginals from seeded sample caches and can optionally
    report per-file standard errors.
    """
    n = pop.n_files
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n_files")
    if method == "exact":
        if _prefix_count(n, k) > _MAX_PREFIXES:
            raise ValueError(
                "instance too large for exact enumeration; use method='monte-carlo'"
            )
        t = _iid_exact(pop.a, k)
        return CachingMarginals(t)
    if method == "monte-carlo":
        freq, stderr = _iid_monte_carlo(pop.a, k, draws, seed)
        marg = CachingMarginals(freq)
        return (marg, stderr) if with_stderr else marg
    raise ValueError(f"unknown method {method!r}")
