import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from socialfield.grid import (
    EMPTY,
    Boundary,
    Footprint,
    GridGeometry,
    OccupancyGrid,
    SuIndex,
    footprint_cells,
    local_density,
    local_density_map,
    shifted,
    wrap,
)


def test_wrap_examples():
    g = GridGeometry(100, 100)
    assert wrap(g, (100, -1)) == SuIndex(0, 99)
    assert wrap(g, (5, 5)) == SuIndex(5, 5)
    assert wrap(GridGeometry(10, 10, Boundary.CLOSED), (10, 3)) is None


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6), st.integers(1, 50), st.integers(1, 50))
def test_wrap_idempotent_and_in_range(x, y, w, h):
    g = GridGeometry(w, h)
    p = wrap(g, (x, y))
    assert 0 <= p.x < w and 0 <= p.y < h
    assert wrap(g, p) == p
    assert wrap(g, (x + 3 * w, y - 2 * h)) == p


def test_geometry_rejects_nonpositive():
    with pytest.raises(ValueError):
        GridGeometry(0, 5)


def test_footprint_must_be_odd():
    with pytest.raises(ValueError):
        Footprint(2, 3)


def test_footprint_examples(torus10):
    cells, clipped = footprint_cells(torus10, (5, 5), Footprint(1, 1))
    assert cells == {(5, 5)} and not clipped
    cells, _ = footprint_cells(torus10, (0, 0), Footprint(3, 3))
    assert cells == {(9, 9), (0, 9), (1, 9), (9, 0), (0, 0), (1, 0), (9, 1), (0, 1), (1, 1)}
    cells, _ = footprint_cells(torus10, (2, 2), Footprint(3, 1))
    assert cells == {(1, 2), (2, 2), (3, 2)}


def test_footprint_clipped_on_closed_edge(box10):
    cells, clipped = footprint_cells(box10, (0, 0), Footprint(3, 3))
    assert clipped
    assert cells == {(0, 0), (1, 0), (0, 1), (1, 1)}


@given(st.integers(0, 9), st.integers(0, 9), st.sampled_from([1, 3, 5]), st.sampled_from([1, 3, 5]))
def test_footprint_area_on_torus(x, y, w, h):
    cells, clipped = footprint_cells(GridGeometry(10, 10), (x, y), Footprint(w, h))
    assert len(cells) == w * h and not clipped


def test_local_density_examples(torus10):
    occ = OccupancyGrid(torus10)
    assert local_density(occ, (4, 4), 2) == 0.0
    occ.place((5, 5), Footprint(1, 1), 0)
    assert local_density(occ, (5, 5), 1) == pytest.approx(1 / 9)
    full = OccupancyGrid(torus10, np.zeros(torus10.shape, dtype=np.int32))
    assert local_density(full, (0, 0), 1) == 1.0


@given(st.sampled_from(list(Boundary)), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_density_map_matches_scalar(boundary, radius, seed):
    g = GridGeometry(9, 7, boundary)
    rng = np.random.default_rng(seed)
    mask = rng.random(g.shape) < 0.4
    occ = OccupancyGrid(g, np.where(mask, 0, EMPTY).astype(np.int32))
    dmap = local_density_map(mask, radius, boundary)
    for y in range(g.height):
        for x in range(g.width):
            assert dmap[y, x] == pytest.approx(local_density(occ, (x, y), radius), abs=1e-6)


def test_place_rejects_overlap(torus10):
    occ = OccupancyGrid(torus10)
    occ.place((1, 1), Footprint(3, 3), 0)
    with pytest.raises(ValueError):
        occ.place((2, 2), Footprint(1, 1), 1)


@pytest.mark.parametrize("boundary", list(Boundary))
def test_shifted_convention(boundary):
    a = np.arange(20.0).reshape(4, 5)
    out = shifted(a, 1, 2, boundary)
    assert out[3, 2] == a[1, 1]
    if boundary is Boundary.PERIODIC:
        assert out[0, 0] == a[2, 4]
    else:
        assert out[0, 0] == 0
