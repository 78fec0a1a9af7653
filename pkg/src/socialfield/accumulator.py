"""Atomics-free accumulation of per-address contribution streams.

``one_step_sum`` adds every term in index order. ``multi_step_sum`` streams
the terms through ``K`` partial sums (term ``i*K + j`` lands in partial ``j``),
so the auxiliary storage per address is ``K`` scalars however long the
stream is. Streams whose length is not a multiple of ``K`` are padded with
zeros.
"""

from __future__ import annotations

import numpy as np

CHUNK_WIDTHS = (2, 4, 8, 16)


class ConfigurationError(ValueError):
    pass


def check_chunk_width(k: int) -> int:
    if k not in CHUNK_WIDTHS:
        raise ConfigurationError(f"chunk width K must be one of {CHUNK_WIDTHS}, got {k!r}")
    return int(k)


def chunk_count(n: int, k: int) -> int:
    """Number of K-wide chunks needed for ``n`` terms (zero-padded)."""
    if n < 0:
        raise ValueError("term count must be non-negative")
    return -(-n // k)


def _as_stream(c) -> np.ndarray:
    arr = np.asarray(c)
    if arr.dtype.kind != "f":
        arr = arr.astype(np.float64)
    return arr.reshape(-1)


def one_step_sum(c):
    """Sum of the stream in index order, in the stream's float dtype."""
    arr = _as_stream(c)
    if arr.size == 0:
        return arr.dtype.type(0)
    # accumulate is a strict left-to-right scan; np.sum would reassociate pairwise.
    return np.add.accumulate(arr)[-1]


class StepCache:
    """K running partial sums owned by one address."""

    __slots__ = ("k", "partials")

    def __init__(self, k: int, dtype=np.float64):
        self.k = check_chunk_width(k)
        self.partials = np.zeros(self.k, dtype=dtype)

    def clear(self) -> None:
        self.partials[:] = 0

    def total(self):
        return np.add.accumulate(self.partials)[-1]


def multi_step_partials(c, k: int) -> np.ndarray:
    """The K partial sums: ``partials[j] = c[j] + c[K + j] + c[2K + j] + ...`` in order."""
    k = check_chunk_width(k)
    arr = _as_stream(c)
    m = chunk_count(arr.size, k)
    if m == 0:
        return np.zeros(k, dtype=arr.dtype)
    padded = np.zeros(m * k, dtype=arr.dtype)
    padded[: arr.size] = arr
    # Column-wise accumulate adds chunk after chunk, same as a loop of K-wide vector adds.
    return np.add.accumulate(padded.reshape(m, k), axis=0)[-1]


def multi_step_sum(c, k: int, cache: StepCache | None = None):
    """Chunked sum of the stream through a K-slot :class:`StepCache`."""
    k = check_chunk_width(k)
    arr = _as_stream(c)
    if cache is None:
        cache = StepCache(k, arr.dtype)
    elif cache.k != k:
        raise ConfigurationError(f"cache width {cache.k} does not match K={k}")
    cache.partials[:] = multi_step_partials(arr, k)
    return cache.total()
