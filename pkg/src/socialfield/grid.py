"""Discrete space: the space-unit lattice, boundaries, footprints, occupancy."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

EMPTY = -1


class Boundary(enum.Enum):
    PERIODIC = "periodic"
    CLOSED = "closed"


class SuIndex(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class GridGeometry:
    width: int
    height: int
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape ``(height, width)``."""
        return (self.height, self.width)

    @property
    def cells(self) -> int:
        return self.width * self.height

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC


@dataclass(frozen=True)
class Footprint:
    width: int
    height: int

    def __post_init__(self):
        for name, v in (("width", self.width), ("height", self.height)):
            if v < 1 or v % 2 == 0:
                raise ValueError(f"footprint {name} must be an odd positive integer, got {v}")

    @property
    def half_width(self) -> int:
        return (self.width - 1) // 2

    @property
    def half_height(self) -> int:
        return (self.height - 1) // 2

    @property
    def area(self) -> int:
        return self.width * self.height

    def offsets(self) -> list[tuple[int, int]]:
        """Center-relative ``(dx, dy)`` offsets covered by the footprint, row-major."""
        hw, hh = self.half_width, self.half_height
        return [(dx, dy) for dy in range(-hh, hh + 1) for dx in range(-hw, hw + 1)]

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"


def wrap(g: GridGeometry, p: tuple[int, int]) -> SuIndex | None:
    """Normalize a raw ``(x, y)`` pair onto the lattice.

    Returns ``None`` for points outside a closed lattice.
    """
    x, y = int(p[0]), int(p[1])
    if g.periodic:
        return SuIndex(x % g.width, y % g.height)
    if 0 <= x < g.width and 0 <= y < g.height:
        return SuIndex(x, y)
    return None


def footprint_cells(
    g: GridGeometry, center: tuple[int, int], f: Footprint
) -> tuple[frozenset[SuIndex], bool]:
    """Cells covered by footprint ``f`` centered at ``center``.

    Returns ``(cells, clipped)``; ``clipped`` is True when part of the footprint
    falls outside a closed lattice and was dropped.
    """
    cells = set()
    clipped = False
    cx, cy = center
    for dx, dy in f.offsets():
        su = wrap(g, (cx + dx, cy + dy))
        if su is None:
            clipped = True
        else:
            cells.add(su)
    return frozenset(cells), clipped


@dataclass
class OccupancyGrid:
    """Lattice of occupant indices; ``EMPTY`` marks a free cell."""

    geometry: GridGeometry
    cells: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.full(self.geometry.shape, EMPTY, dtype=np.int32)
        elif self.cells.shape != self.geometry.shape:
            raise ValueError(f"cells shape {self.cells.shape} does not match {self.geometry.shape}")

    def occupied(self) -> np.ndarray:
        return self.cells != EMPTY

    def place(self, center: tuple[int, int], f: Footprint, owner: int) -> None:
        cells, clipped = footprint_cells(self.geometry, center, f)
        if clipped:
            raise ValueError(f"footprint {f} at {tuple(center)} leaves the closed lattice")
        for su in cells:
            if self.cells[su.y, su.x] != EMPTY:
                raise ValueError(f"cell {tuple(su)} already owned by {self.cells[su.y, su.x]}")
        for su in cells:
            self.cells[su.y, su.x] = owner

    def copy(self) -> OccupancyGrid:
        return OccupancyGrid(self.geometry, self.cells.copy())


def local_density(occ: OccupancyGrid, center: tuple[int, int], radius: int = 3) -> float:
    """Fraction of occupied cells in the Chebyshev window of ``radius`` around ``center``."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    g = occ.geometry
    cx, cy = center
    total = 0
    hit = 0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            su = wrap(g, (cx + dx, cy + dy))
            if su is None:
                continue
            total += 1
            hit += occ.cells[su.y, su.x] != EMPTY
    return hit / total


def local_density_map(occupied: np.ndarray, radius: int, boundary: Boundary) -> np.ndarray:
    """Local density at every cell at once, via a summed-area table.

    ``occupied`` is a boolean ``(height, width)`` mask. Matches
    :func:`local_density` cell by cell, including window clipping on a closed
    lattice; a periodic window wider than the lattice counts wrapped cells
    repeatedly, exactly like the scalar version.
    """
    h, w = occupied.shape
    r = radius
    mode = "wrap" if boundary is Boundary.PERIODIC else "constant"
    # np.pad(mode="wrap") cannot pad wider than the array when r > size: tile instead.
    if mode == "wrap":
        reps_y = -(-(2 * r + h) // h) + 2
        reps_x = -(-(2 * r + w) // w) + 2
        big = np.tile(occupied.astype(np.int64), (reps_y, reps_x))
        oy = h * (reps_y // 2) - r
        ox = w * (reps_x // 2) - r
        padded = big[oy : oy + h + 2 * r, ox : ox + w + 2 * r]
        valid = np.ones_like(padded)
    else:
        padded = np.pad(occupied.astype(np.int64), r)
        valid = np.pad(np.ones((h, w), dtype=np.int64), r)
    counts = _box_sum(padded, r, h, w)
    areas = _box_sum(valid, r, h, w)
    return (counts / areas).astype(np.float32)


def _box_sum(padded: np.ndarray, r: int, h: int, w: int) -> np.ndarray:
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    sat[1:, 1:] = padded.cumsum(0).cumsum(1)
    k = 2 * r + 1
    return sat[k : k + h, k : k + w] - sat[0:h, k : k + w] - sat[k : k + h, 0:w] + sat[0:h, 0:w]


def shifted(arr: np.ndarray, dx: int, dy: int, boundary: Boundary) -> np.ndarray:
    """Return ``out`` with ``out[y, x] = arr[y - dy, x - dx]`` (zero-filled when closed)."""
    if boundary is Boundary.PERIODIC:
        return np.roll(arr, shift=(dy, dx), axis=(0, 1))
    h, w = arr.shape[:2]
    out = np.zeros_like(arr)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    ys, yd = (slice(0, h - dy), slice(dy, h)) if dy >= 0 else (slice(-dy, h), slice(0, h + dy))
    xs, xd = (slice(0, w - dx), slice(dx, w)) if dx >= 0 else (slice(-dx, w), slice(0, w + dx))
    out[yd, xd] = arr[ys, xs]
    return out


def pad_lattice(arr: np.ndarray, ry: int, rx: int, boundary: Boundary) -> np.ndarray:
    """Pad a 2-D lattice by ``(ry, rx)`` with wrapped (periodic) or zero (closed) halos."""
    if boundary is Boundary.PERIODIC:
        h, w = arr.shape
        if ry > h or rx > w:
            reps_y = -(-ry // h) * 2 + 1
            reps_x = -(-rx // w) * 2 + 1
            big = np.tile(arr, (reps_y, reps_x))
            oy = h * (reps_y // 2) - ry
            ox = w * (reps_x // 2) - rx
            return np.ascontiguousarray(big[oy : oy + h + 2 * ry, ox : ox + w + 2 * rx])
        return np.pad(arr, ((ry, ry), (rx, rx)), mode="wrap")
    return np.pad(arr, ((ry, ry), (rx, rx)))
