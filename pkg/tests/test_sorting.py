import itertools

import numpy as np
import pytest

from socialfield.engine.sorting import NETWORK_8, sort8_desc


def oracle(row):
    return sorted(range(8), key=lambda i: (-row[i], i))


def test_network_size():
    assert len(NETWORK_8) == 19


def test_zero_one_principle():
    rows = np.array(list(itertools.product([0, 1], repeat=8)), dtype=np.float32)
    perm = sort8_desc(rows)
    for row, p in zip(rows, perm):
        assert list(p) == oracle(list(row))


def test_examples():
    assert list(sort8_desc(np.zeros(8))) == list(range(8))
    assert list(sort8_desc(np.arange(8, 0, -1))) == list(range(8))


def test_random_against_sort_oracle():
    rng = np.random.default_rng(0)
    # Coarse values so ties are common.
    rows = rng.integers(-3, 4, size=(10_000, 8)).astype(np.float32)
    perm = sort8_desc(rows)
    for row, p in zip(rows, perm):
        assert list(p) == oracle(list(row))


def test_shape_checked():
    with pytest.raises(ValueError):
        sort8_desc(np.zeros(7))
