import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from socialfield.accumulator import (
    CHUNK_WIDTHS,
    ConfigurationError,
    StepCache,
    chunk_count,
    multi_step_partials,
    multi_step_sum,
    one_step_sum,
)


def naive(c):
    total = type(c[0])(0) if len(c) else 0.0
    for v in c:
        total = total + v
    return total


def test_one_step_examples():
    assert one_step_sum([]) == 0
    assert one_step_sum([1, 2, 3]) == 6


def test_one_step_matches_naive_loop():
    c = np.random.default_rng(48).standard_normal(48).astype(np.float32)
    assert one_step_sum(c).tobytes() == naive(list(c)).tobytes()


def test_multi_step_examples():
    assert list(multi_step_partials([1, 2, 3, 4, 5, 6], 2)) == [9, 12]
    assert multi_step_sum([1, 2, 3, 4, 5, 6], 2) == 21
    assert list(multi_step_partials([1, 2, 3, 4, 5], 4)) == [6, 2, 3, 4]
    assert multi_step_sum([1, 2, 3, 4, 5], 4) == 15


def test_partials_match_strided_loop():
    c = np.random.default_rng(7).standard_normal(53)
    for k in CHUNK_WIDTHS:
        ref = [0.0] * k
        for i, v in enumerate(c):
            ref[i % k] += v
        assert list(multi_step_partials(c, k)) == ref


@pytest.mark.parametrize("k", CHUNK_WIDTHS)
def test_multi_step_close_to_one_step(k):
    c = np.random.default_rng(k).random(48).astype(np.float32)
    assert multi_step_sum(c, k) == pytest.approx(one_step_sum(c), rel=1e-6)


@given(st.lists(st.integers(-2**10, 2**10), max_size=300), st.sampled_from(CHUNK_WIDTHS))
def test_integer_streams_exact(terms, k):
    c = np.array(terms, dtype=np.float32)
    assert multi_step_sum(c, k) == one_step_sum(c) == sum(terms)


@given(st.lists(st.floats(-1e3, 1e3), max_size=100), st.sampled_from(CHUNK_WIDTHS), st.integers(1, 20))
def test_zero_padding_is_neutral(terms, k, pad):
    c = np.array(terms)
    assert multi_step_sum(np.concatenate([c, np.zeros(pad)]), k) == multi_step_sum(c, k)


def test_chunk_count_examples():
    assert chunk_count(48, 8) == 6
    assert chunk_count(0, 4) == 0
    assert chunk_count(5, 4) == 2


@pytest.mark.parametrize("k", [0, 1, 3, 32])
def test_bad_chunk_width(k):
    with pytest.raises(ConfigurationError):
        multi_step_sum([1.0], k)
    with pytest.raises(ConfigurationError):
        StepCache(k)


def test_cache_reused_and_width_checked():
    cache = StepCache(4)
    assert multi_step_sum([1.0, 2.0], 4, cache) == 3.0
    assert multi_step_sum([5.0], 4, cache) == 5.0
    with pytest.raises(ConfigurationError):
        multi_step_sum([1.0], 8, cache)
