"""Pure-numpy fallback for the per-trial association scan.

Mirrors the compiled kernel exactly: a candidate user loads its requested
slot iff no POA caching that file strictly beats the serving POA's
average received power at the user's location (ties go to the serving
POA). Distances are toroidal.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 2048


def _d2(points: np.ndarray, ref: np.ndarray, box: float) -> np.ndarray:
    delta = np.abs(points - ref)
    delta = np.minimum(delta, box - delta)
    return (delta * delta).sum(axis=-1)


def load_slots(
    pos: np.ndarray,
    power: np.ndarray,
    cache_cols: np.ndarray,
    serving: int,
    user_pos: np.ndarray,
    user_slot: np.ndarray,
    box: float,
    alpha: float,
) -> np.ndarray:
    """Per-slot flags: does any candidate user associate with the serving POA."""
    n_slots = cache_cols.shape[1]
    loaded = np.zeros(n_slots, dtype=np.uint8)
    neg = -alpha / 2.0
    ref = pos[serving]
    p0 = power[serving]
    for s in range(n_slots):
        users = user_pos[user_slot == s]
        if users.shape[0] == 0:
            continue
        members = np.flatnonzero(cache_cols[:, s])
        mpos = pos[members]
        mpow = power[members]
        with np.errstate(divide="ignore"):
            w_serving = p0 * _d2(users, ref, box) ** neg
        hit = False
        for lo in range(0, users.shape[0], _CHUNK):
            chunk = users[lo : lo + _CHUNK]
            delta = np.abs(chunk[:, None, :] - mpos[None, :, :])
            delta = np.minimum(delta, box - delta)
            d2 = (delta * delta).sum(axis=-1)
            with np.errstate(divide="ignore"):
                best = (mpow * d2**neg).max(axis=1)
            if np.any(w_serving[lo : lo + _CHUNK] >= best):
                hit = True
                break
        loaded[s] = hit
    return loaded
