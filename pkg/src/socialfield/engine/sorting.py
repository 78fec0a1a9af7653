"""Fixed compare-exchange network ranking eight direction scores."""

from __future__ import annotations

import numpy as np

# Batcher odd-even merge network for 8 inputs: 19 comparators, depth 6.
NETWORK_8: tuple[tuple[int, int], ...] = (
    (0, 1), (2, 3), (4, 5), (6, 7),
    (0, 2), (1, 3), (4, 6), (5, 7),
    (1, 2), (5, 6),
    (0, 4), (1, 5), (2, 6), (3, 7),
    (2, 4), (3, 5),
    (1, 2), (3, 4), (5, 6),
)


def sort8_desc(scores) -> np.ndarray:
    """Sect permutation ordering ``scores`` (last axis, length 8) high to low.

    Ties go to the lower sect index. Works on a single row or any batch
    ``(..., 8)``; every compare-exchange is a select, never a branch.
    """
    s = np.asarray(scores)
    if s.shape[-1] != 8:
        raise ValueError(f"expected 8 scores on the last axis, got shape {s.shape}")
    vals = [s[..., i] for i in range(8)]
    idx = [np.full(s.shape[:-1], i, dtype=np.int8) for i in range(8)]
    for i, j in NETWORK_8:
        keep = (vals[i] > vals[j]) | ((vals[i] == vals[j]) & (idx[i] < idx[j]))
        vals[i], vals[j] = np.where(keep, vals[i], vals[j]), np.where(keep, vals[j], vals[i])
        idx[i], idx[j] = np.where(keep, idx[i], idx[j]), np.where(keep, idx[j], idx[i])
    return np.stack(idx, axis=-1)
