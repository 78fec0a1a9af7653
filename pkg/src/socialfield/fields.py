"""Field templates, their discrete strength, sect indexing and write plans.

A field centered at ``c`` induces at target ``t`` a 2-D strength vector of
magnitude ``gain * exp(decay * |t - c|)``. Repulsive kinds point away from
the center, attractive kinds toward it. The vector's direction is binned into
one of eight 45 degree sects, giving the third axis of a strength image
``image[y, x, sect]``.

A :class:`WritePlan` inverts this relation once per field geometry: for each
sect it lists the center offsets (relative to the target) whose field lands
on that ``(target, sect)`` address. The longest list is the strength fan-out.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .grid import Footprint, GridGeometry, SuIndex, shifted

N_SECTS = 8

# Unit steps per sect, counter-clockwise from +x.
SECT_STEPS: tuple[tuple[int, int], ...] = (
    (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1),
)


class FieldKind(enum.Enum):
    OMNI_ATTRACTIVE = "omni_attractive"
    OMNI_REPULSIVE = "omni_repulsive"
    DIR_ATTRACTIVE = "dir_attractive"
    DIR_REPULSIVE = "dir_repulsive"
    RECURRENT_REPULSIVE = "recurrent_repulsive"

    @property
    def static(self) -> bool:
        return self in (FieldKind.OMNI_ATTRACTIVE, FieldKind.OMNI_REPULSIVE)

    @property
    def directional(self) -> bool:
        return self in (FieldKind.DIR_ATTRACTIVE, FieldKind.DIR_REPULSIVE)

    @property
    def attractive(self) -> bool:
        return self in (FieldKind.OMNI_ATTRACTIVE, FieldKind.DIR_ATTRACTIVE)


DYNAMIC_KINDS = (FieldKind.DIR_ATTRACTIVE, FieldKind.DIR_REPULSIVE, FieldKind.RECURRENT_REPULSIVE)


@dataclass(frozen=True)
class FieldSpec:
    """One field's shape and parameters.

    ``orientation`` and ``cone`` only matter for directional kinds: the field
    covers the targets whose octant is within ``cone`` sects of ``orientation``.
    """

    kind: FieldKind
    geometry: Footprint
    gain: float = 1.0
    decay: float = -0.5
    orientation: int = 0
    cone: int = 1

    def __post_init__(self):
        if not math.isfinite(self.gain) or self.gain < 0:
            raise ValueError(f"gain must be finite and non-negative, got {self.gain}")
        if not math.isfinite(self.decay):
            raise ValueError(f"decay must be finite, got {self.decay}")
        if not 0 <= self.orientation < N_SECTS:
            raise ValueError(f"orientation must be a sect in [0, 8), got {self.orientation}")
        if not 0 <= self.cone <= 4:
            raise ValueError(f"cone half-width must be in [0, 4], got {self.cone}")
        reach = math.hypot(self.geometry.half_width, self.geometry.half_height)
        if not math.isfinite(self.gain * math.exp(max(self.decay * reach, 0.0))):
            raise ValueError("field strength overflows over its support")

    def oriented(self, orientation: int) -> FieldSpec:
        return FieldSpec(self.kind, self.geometry, self.gain, self.decay, orientation, self.cone)


def sect_index(v: tuple[float, float]) -> int | None:
    """Octant of vector ``v``; sect ``s`` spans angles ``[45s - 22.5, 45s + 22.5)`` degrees.

    Returns ``None`` for the zero vector.
    """
    vx, vy = float(v[0]), float(v[1])
    if vx == 0.0 and vy == 0.0:
        return None
    angle = math.degrees(math.atan2(vy, vx)) % 360.0
    return int(math.floor((angle + 22.5) / 45.0)) % N_SECTS


def sect_distance(a: int, b: int) -> int:
    """Circular distance between two sects (0..4)."""
    d = abs(a - b) % N_SECTS
    return min(d, N_SECTS - d)


def offset_strength(f: FieldSpec, dx: int, dy: int) -> np.ndarray:
    """Strength vector at displacement ``(dx, dy)`` from the field center."""
    g = f.geometry
    if (dx == 0 and dy == 0) or abs(dx) > g.half_width or abs(dy) > g.half_height:
        return np.zeros(2)
    if f.kind.directional and sect_distance(sect_index((dx, dy)), f.orientation) > f.cone:
        return np.zeros(2)
    r = math.hypot(dx, dy)
    mag = f.gain * math.exp(f.decay * r)
    unit = np.array([dx / r, dy / r])
    return -mag * unit if f.kind.attractive else mag * unit


def displacement(g: GridGeometry, center: tuple[int, int], target: tuple[int, int]) -> tuple[int, int]:
    """``target - center``, using the minimal image on a periodic lattice."""
    dx = target[0] - center[0]
    dy = target[1] - center[1]
    if g.periodic:
        dx = (dx + g.width // 2) % g.width - g.width // 2
        dy = (dy + g.height // 2) % g.height - g.height // 2
    return dx, dy


def strength_at(f: FieldSpec, center: tuple[int, int], target: tuple[int, int], g: GridGeometry) -> np.ndarray:
    """Strength vector of field ``f`` centered at ``center``, observed at ``target``."""
    dx, dy = displacement(g, center, target)
    return offset_strength(f, dx, dy)


def support(f: FieldSpec) -> list[tuple[int, int]]:
    """Displacements (target minus center) where ``f`` has nonzero strength, sorted."""
    g = f.geometry
    out = []
    for dx in range(-g.half_width, g.half_width + 1):
        for dy in range(-g.half_height, g.half_height + 1):
            if np.any(offset_strength(f, dx, dy) != 0):
                out.append((dx, dy))
    return out


class Contributor(NamedTuple):
    center_offset: tuple[int, int]
    slot: int
    magnitude: float


@dataclass(frozen=True)
class WritePlan:
    """Target-independent map from sect to the centers that write it.

    ``contributors[s]`` lists, for any target ``t``, the field centers
    ``t + center_offset`` whose field lands on address ``(t, s)``; slots are
    ``0..len-1`` in lexicographic order of the center offset.
    """

    field: FieldSpec
    contributors: tuple[tuple[Contributor, ...], ...]

    @property
    def geometry(self) -> Footprint:
        return self.field.geometry

    @property
    def fanout(self) -> int:
        return max((len(c) for c in self.contributors), default=0)

    def counts(self) -> list[int]:
        return [len(c) for c in self.contributors]


def build_write_plan(f: FieldSpec) -> WritePlan:
    lists: list[list[tuple[tuple[int, int], float]]] = [[] for _ in range(N_SECTS)]
    for dx, dy in support(f):
        vec = offset_strength(f, dx, dy)
        lists[sect_index(vec)].append(((-dx, -dy), float(np.hypot(*vec))))
    contributors = tuple(
        tuple(Contributor(co, slot, mag) for slot, (co, mag) in enumerate(sorted(entries)))
        for entries in lists
    )
    return WritePlan(f, contributors)


def fanout(plan: WritePlan) -> int:
    return plan.fanout


def fanout_oracle(f: FieldSpec, targets: Iterable[tuple[int, int]] = ((0, 0),)) -> tuple[int, dict]:
    """Brute-force fan-out: evaluate every candidate center against every target.

    Returns ``(sf, sets)`` where ``sets[(target, sect)]`` is the set of absolute
    centers writing that address. Uses only :func:`strength_at` and
    :func:`sect_index` on an unbounded lattice.
    """
    g = f.geometry
    big = GridGeometry(4 * g.width + 8, 4 * g.height + 8)
    sets: dict[tuple[tuple[int, int], int], set[tuple[int, int]]] = {}
    for tx, ty in targets:
        for cx in range(tx - g.width, tx + g.width + 1):
            for cy in range(ty - g.height, ty + g.height + 1):
                vec = strength_at(f, (cx, cy), (tx, ty), big)
                s = sect_index(vec)
                if s is None:
                    continue
                sets.setdefault(((tx, ty), s), set()).add((cx, cy))
    sf = max((len(v) for v in sets.values()), default=0)
    return sf, sets


def new_image(g: GridGeometry) -> np.ndarray:
    """All-zero strength image of shape ``(height, width, 8)``."""
    return np.zeros((g.height, g.width, N_SECTS), dtype=np.float32)


def rasterize_counts(f: FieldSpec, centers: np.ndarray, g: GridGeometry, out: np.ndarray | None = None) -> np.ndarray:
    """Scatter field ``f`` from every center in ``centers`` into a float64 image.

    ``centers`` is a ``(height, width)`` array counting field centers per cell.
    Accumulates into ``out`` when given. Walks the support directly, so it
    shares no code with :func:`build_write_plan`.
    """
    if out is None:
        out = np.zeros((g.height, g.width, N_SECTS), dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if not centers.any():
        return out
    for dx, dy in support(f):
        vec = offset_strength(f, dx, dy)
        out[:, :, sect_index(vec)] += float(np.hypot(*vec)) * shifted(centers, dx, dy, g.boundary)
    return out


def rasterize_static(fields: Iterable[tuple[FieldSpec, SuIndex]], g: GridGeometry) -> np.ndarray:
    """Composite float32 image of static (omnidirectional) fields at their anchors."""
    acc = np.zeros((g.height, g.width, N_SECTS), dtype=np.float64)
    for f, anchor in fields:
        if not f.kind.static:
            raise ValueError(f"{f.kind.value} is not a static field kind")
        mask = np.zeros(g.shape)
        mask[anchor[1] % g.height, anchor[0] % g.width] = 1.0
        rasterize_counts(f, mask, g, out=acc)
    return acc.astype(np.float32)
