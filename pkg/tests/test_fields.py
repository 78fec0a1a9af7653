import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socialfield.fields import (
    N_SECTS,
    FieldKind,
    FieldSpec,
    build_write_plan,
    fanout,
    fanout_oracle,
    new_image,
    rasterize_counts,
    rasterize_static,
    sect_distance,
    sect_index,
    strength_at,
    support,
)
from socialfield.grid import Footprint, GridGeometry, SuIndex

G7 = Footprint(7, 7)
ODD = [1, 3, 5, 7, 9, 11]


def spec(kind=FieldKind.RECURRENT_REPULSIVE, w=7, h=7, **kw):
    return FieldSpec(kind, Footprint(w, h), **kw)


def test_strength_examples(torus10):
    f = spec()
    assert np.all(strength_at(f, (5, 5), (5, 5), torus10) == 0)
    v = strength_at(f, (0, 0), (2, 0), GridGeometry(20, 20))
    assert np.hypot(*v) == pytest.approx(math.exp(-1.0))
    assert v[0] > 0 and v[1] == 0
    att = spec(FieldKind.OMNI_ATTRACTIVE)
    v = strength_at(att, (0, 0), (0, 3), GridGeometry(20, 20))
    assert np.hypot(*v) == pytest.approx(0.2231, abs=1e-4)
    assert v[0] == 0 and v[1] < 0


def test_strength_outside_support_is_zero():
    assert np.all(strength_at(spec(w=3, h=3), (0, 0), (2, 0), GridGeometry(20, 20)) == 0)


def test_strength_uses_minimal_image(torus10):
    f = spec()
    assert np.allclose(strength_at(f, (9, 0), (1, 0), torus10), strength_at(f, (0, 0), (2, 0), torus10))


def test_sect_examples():
    assert sect_index((1, 0)) == 0
    assert sect_index((1, 1)) == 1
    assert sect_index((3, 2)) == 1
    assert sect_index((0, 0)) is None


def test_sect_wedges_are_half_open():
    assert sect_index((math.cos(math.radians(22.5)), math.sin(math.radians(22.5)))) == 1
    assert sect_index((1, -1e-9)) == 0
    assert sect_index((-1, 0)) == 4
    assert sect_index((0, -1)) == 6


@given(st.integers(0, 7), st.integers(0, 7))
def test_sect_distance_symmetric(a, b):
    assert sect_distance(a, b) == sect_distance(b, a) <= 4


def test_support_sizes():
    assert support(spec(FieldKind.OMNI_REPULSIVE, 1, 1)) == []
    assert len(support(spec(FieldKind.OMNI_REPULSIVE, 3, 3))) == 8
    assert len(support(spec(FieldKind.OMNI_REPULSIVE, 7, 7))) == 48


def test_directional_support_is_front_cone():
    f = spec(FieldKind.DIR_REPULSIVE, orientation=2)
    assert {sect_index(d) for d in support(f)} == {1, 2, 3}


def test_fanout_examples():
    assert fanout(build_write_plan(spec(FieldKind.OMNI_REPULSIVE, 1, 1))) == 0
    assert fanout(build_write_plan(spec(FieldKind.OMNI_REPULSIVE, 3, 3))) == 1


def test_recurrent_7x7_fanout_frozen():
    plan = build_write_plan(spec())
    assert plan.counts() == [5, 7, 5, 7, 5, 7, 5, 7]
    assert plan.fanout == 7


def test_sect1_contributors_for_target_2_2():
    plan = build_write_plan(spec())
    centers = {(2 + ox, 2 + oy) for (ox, oy), _, _ in plan.contributors[1]}
    assert {(-1, -1), (-1, 0), (0, 0), (1, 0), (0, 1), (1, 1)} <= centers
    assert centers - {(-1, -1), (-1, 0), (0, 0), (1, 0), (0, 1), (1, 1)} == {(0, -1)}


@pytest.mark.parametrize("kind", list(FieldKind))
def test_plan_matches_oracle_per_kind(kind):
    for w in (3, 7):
        for h in (3, 5):
            f = spec(kind, w, h, orientation=3)
            plan = build_write_plan(f)
            sf, sets = fanout_oracle(f, targets=[(0, 0), (4, -2)])
            assert plan.fanout == sf
            for (t, s), centers in sets.items():
                got = {(t[0] + ox, t[1] + oy) for (ox, oy), _, _ in plan.contributors[s]}
                assert got == centers


@given(st.sampled_from(list(FieldKind)), st.sampled_from(ODD), st.sampled_from(ODD))
@settings(max_examples=40, deadline=None)
def test_slots_injective_and_complete(kind, w, h):
    plan = build_write_plan(spec(kind, w, h))
    for entries in plan.contributors:
        assert sorted(c.slot for c in entries) == list(range(len(entries)))
        assert len({c.center_offset for c in entries}) == len(entries)
    assert sum(plan.counts()) == len(support(plan.field))


def test_square_fanouts_frozen():
    got = [build_write_plan(spec(FieldKind.OMNI_REPULSIVE, n, n)).fanout for n in ODD]
    assert got == [0, 1, 4, 7, 12, 17]


@given(st.integers(0, 14), st.integers(0, 11), st.integers(-5, 5), st.integers(-5, 5))
@settings(max_examples=30, deadline=None)
def test_rasterize_translation_covariant(x, y, sx, sy):
    g = GridGeometry(15, 12)
    f = spec(w=5, h=5)
    a = np.zeros(g.shape)
    a[y, x] = 1
    b = np.roll(a, (sy, sx), axis=(0, 1))
    ia, ib = rasterize_counts(f, a, g), rasterize_counts(f, b, g)
    assert np.array_equal(np.roll(ia, (sy, sx), axis=(0, 1)), ib)


def test_rasterize_matches_pointwise_evaluation(box10):
    f = spec(FieldKind.DIR_ATTRACTIVE, 5, 5, orientation=6)
    centers = np.zeros(box10.shape)
    centers[3, 4] = 1
    centers[8, 1] = 1
    img = rasterize_counts(f, centers, box10)
    ref = np.zeros_like(img)
    for cx, cy in [(4, 3), (1, 8)]:
        for tx in range(10):
            for ty in range(10):
                v = strength_at(f, (cx, cy), (tx, ty), box10)
                if np.any(v):
                    ref[ty, tx, sect_index(v)] += np.hypot(*v)
    assert np.allclose(img, ref, atol=1e-12)


def test_static_examples(torus10):
    assert not rasterize_static([], torus10).any()
    one = rasterize_static([(spec(FieldKind.OMNI_REPULSIVE, 3, 3), SuIndex(5, 5))], torus10)
    nz = np.argwhere(one)
    assert len(nz) == 8
    assert sorted(int(s) for s in nz[:, 2]) == list(range(N_SECTS))
    for y, x, s in nz:
        assert max(abs(x - 5), abs(y - 5)) == 1
        assert sect_index((x - 5, y - 5)) == s
    f = spec(FieldKind.OMNI_REPULSIVE, 3, 3)
    two = rasterize_static([(f, SuIndex(5, 5)), (f, SuIndex(5, 5))], torus10)
    assert np.array_equal(two, 2 * one)


def test_static_rejects_dynamic_kind(torus10):
    with pytest.raises(ValueError):
        rasterize_static([(spec(), SuIndex(0, 0))], torus10)


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(gain=-1)
    with pytest.raises(ValueError):
        spec(orientation=8)
    assert new_image(GridGeometry(4, 3)).shape == (3, 4, 8)
