"""Simulation state: pedestrians, occupancy, strength images, per-tick scratch."""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..fields import DYNAMIC_KINDS, N_SECTS, FieldKind, FieldSpec, new_image, rasterize_counts, rasterize_static
from ..grid import EMPTY, Footprint, GridGeometry, OccupancyGrid, SuIndex, footprint_cells

STATIC = "static"
STILL = -1


class IntegrityError(RuntimeError):
    """Raised when a tick would break a structural invariant."""

    def __init__(self, message: str, tick: int | None = None, phase: str | None = None):
        self.tick = tick
        self.phase = phase
        where = ", ".join(p for p in (f"tick {tick}" if tick is not None else "", phase or "") if p)
        super().__init__(f"{message} ({where})" if where else message)


@dataclass
class Pedestrian:
    id: int
    center: SuIndex
    footprint: Footprint = Footprint(1, 1)
    walk_period: int = 1
    walk_phase: int = 0
    goal_sect: int = 0
    dyn_fields: dict[FieldKind, FieldSpec] = field(default_factory=dict)


@dataclass
class Population:
    """Pedestrians as parallel arrays, sorted by id.

    Lattices refer to pedestrians by their position in these arrays, so the
    lower index is always the lower id. All pedestrians share one footprint
    and one set of dynamic field templates; a directional field is oriented
    along its owner's goal sect.
    """

    ids: np.ndarray
    x: np.ndarray
    y: np.ndarray
    period: np.ndarray
    phase: np.ndarray
    goal: np.ndarray
    footprint: Footprint
    fields: dict[FieldKind, FieldSpec]

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def empty(cls, footprint: Footprint, fields: dict[FieldKind, FieldSpec]) -> Population:
        z = np.zeros(0, dtype=np.int32)
        return cls(np.zeros(0, dtype=np.int64), z, z.copy(), z.copy(), z.copy(), z.astype(np.int8),
                   footprint, dict(fields))

    def pedestrian(self, i: int) -> Pedestrian:
        return Pedestrian(
            id=int(self.ids[i]),
            center=SuIndex(int(self.x[i]), int(self.y[i])),
            footprint=self.footprint,
            walk_period=int(self.period[i]),
            walk_phase=int(self.phase[i]),
            goal_sect=int(self.goal[i]),
            dyn_fields={k: f.oriented(int(self.goal[i])) if k.directional else f for k, f in self.fields.items()},
        )

    def field_for(self, kind: FieldKind, i: int) -> FieldSpec:
        f = self.fields[kind]
        return f.oriented(int(self.goal[i])) if kind.directional else f

    def copy(self) -> Population:
        return Population(self.ids.copy(), self.x.copy(), self.y.copy(), self.period.copy(),
                          self.phase.copy(), self.goal.copy(), self.footprint, dict(self.fields))


class Scratch:
    """Temporaries rebuilt every tick: enrollment tables, votes, movement log, step caches."""

    def __init__(self, g: GridGeometry, n_pedestrians: int, k: int):
        h, w = g.shape
        self.k = k
        self.enroll_id = np.full((h, w, N_SECTS), EMPTY, dtype=np.int32)
        self.enroll_score = np.zeros((h, w, N_SECTS), dtype=np.float32)
        self.winner = np.full((h, w), EMPTY, dtype=np.int32)
        self.moved_from = np.full((h, w), EMPTY, dtype=np.int32)
        self.moved_to = np.full((h, w), EMPTY, dtype=np.int32)
        # One K-wide step cache per space unit; reused for each (sect, field kind).
        self.partials = np.zeros((k, h, w), dtype=np.float32)
        self.direction = np.full(n_pedestrians, STILL, dtype=np.int8)
        self.score = np.zeros(n_pedestrians, dtype=np.float32)
        self.moved = np.zeros(n_pedestrians, dtype=bool)

    def registrants(self) -> np.ndarray:
        """Number of enrollment entries per space unit."""
        return (self.enroll_id != EMPTY).sum(axis=2)


@dataclass
class SimState:
    geometry: GridGeometry
    occupancy: OccupancyGrid
    population: Population
    images: dict[str, np.ndarray]
    static_fields: list[tuple[FieldSpec, SuIndex]] = field(default_factory=list)
    tick: int = 0
    rng_seed: int = 0
    scratch: Scratch | None = None

    @classmethod
    def from_pedestrians(
        cls,
        g: GridGeometry,
        pedestrians: list[Pedestrian],
        fields: dict[FieldKind, FieldSpec] | None = None,
        static_fields: list[tuple[FieldSpec, SuIndex]] | None = None,
        rng_seed: int = 0,
        footprint: Footprint | None = None,
    ) -> SimState:
        """Assemble a state and rasterize its images from scratch.

        ``fields`` defaults to the first pedestrian's ``dyn_fields``; every
        pedestrian must share the footprint and field templates.
        """
        peds = sorted(pedestrians, key=lambda p: p.id)
        if len({p.id for p in peds}) != len(peds):
            raise ValueError("pedestrian ids must be unique")
        fp = peds[0].footprint if peds else (footprint or Footprint(1, 1))
        if fields is None:
            fields = peds[0].dyn_fields if peds else {}
        fields = {k: (f.oriented(0) if k.directional else f) for k, f in dict(fields).items()}
        for k in fields:
            if k not in DYNAMIC_KINDS:
                raise ValueError(f"{k.value} cannot be attached to a pedestrian")
        for p in peds:
            if p.footprint != fp:
                raise ValueError("all pedestrians must share one footprint")
            if p.walk_period < 1 or not 0 <= p.walk_phase < p.walk_period:
                raise ValueError(f"pedestrian {p.id}: walk phase must lie in [0, period)")
            if not 0 <= p.goal_sect < N_SECTS:
                raise ValueError(f"pedestrian {p.id}: goal sect out of range")
        pop = Population(
            ids=np.array([p.id for p in peds], dtype=np.int64),
            x=np.array([p.center[0] % g.width if g.periodic else p.center[0] for p in peds], dtype=np.int32),
            y=np.array([p.center[1] % g.height if g.periodic else p.center[1] for p in peds], dtype=np.int32),
            period=np.array([p.walk_period for p in peds], dtype=np.int32),
            phase=np.array([p.walk_phase for p in peds], dtype=np.int32),
            goal=np.array([p.goal_sect for p in peds], dtype=np.int8),
            footprint=fp,
            fields=fields,
        )
        return cls.from_population(g, pop, static_fields, rng_seed)

    @classmethod
    def from_population(
        cls,
        g: GridGeometry,
        pop: Population,
        static_fields: list[tuple[FieldSpec, SuIndex]] | None = None,
        rng_seed: int = 0,
    ) -> SimState:
        """Build occupancy from footprints and rasterize every image."""
        for f in pop.fields.values():
            if f.geometry.width > g.width or f.geometry.height > g.height:
                raise ValueError(f"field geometry {f.geometry} does not fit the {g.width}x{g.height} lattice")
        state = cls(g, OccupancyGrid(g), pop, {}, list(static_fields or []), 0, rng_seed)
        idx = np.arange(len(pop), dtype=np.int32)
        for dx, dy in pop.footprint.offsets():
            xs, ys = pop.x + dx, pop.y + dy
            if g.periodic:
                xs, ys = xs % g.width, ys % g.height
            state.occupancy.cells[ys.clip(0, g.height - 1), xs.clip(0, g.width - 1)] = idx
        problem = state.occupancy_problem()
        if problem:
            raise ValueError(problem)
        state.images = state.rasterize()
        return state

    def rasterize(self) -> dict[str, np.ndarray]:
        """From-scratch images: the static composite plus one per dynamic kind."""
        images = {STATIC: rasterize_static(self.static_fields, self.geometry)}
        for kind, acc in self.rasterize_dynamic64().items():
            images[kind.value] = acc.astype(np.float32)
        return images

    def rasterize_dynamic64(self) -> dict[FieldKind, np.ndarray]:
        g = self.geometry
        pop = self.population
        out = {}
        for kind, spec in pop.fields.items():
            acc = np.zeros((g.height, g.width, N_SECTS), dtype=np.float64)
            orientations = range(N_SECTS) if kind.directional else [None]
            for r in orientations:
                sel = np.ones(len(pop), dtype=bool) if r is None else pop.goal == r
                if not sel.any():
                    continue
                centers = np.zeros(g.shape)
                np.add.at(centers, (pop.y[sel], pop.x[sel]), 1.0)
                rasterize_counts(spec if r is None else spec.oriented(r), centers, g, out=acc)
            out[kind] = acc
        return out

    def occupancy_problem(self) -> str | None:
        """Describe the first mismatch between occupancy and pedestrian footprints, if any."""
        g = self.geometry
        pop = self.population
        expected = np.full(g.shape, EMPTY, dtype=np.int32)
        count = np.zeros(g.shape, dtype=np.int32)
        idx = np.arange(len(pop), dtype=np.int32)
        for dx, dy in pop.footprint.offsets():
            xs, ys = pop.x + dx, pop.y + dy
            if g.periodic:
                xs, ys = xs % g.width, ys % g.height
            else:
                outside = (xs < 0) | (xs >= g.width) | (ys < 0) | (ys >= g.height)
                if outside.any():
                    i = int(np.flatnonzero(outside)[0])
                    return f"pedestrian {pop.ids[i]} extends outside the closed lattice"
            np.add.at(count, (ys, xs), 1)
            expected[ys, xs] = idx
        if (count > 1).any():
            y, x = np.argwhere(count > 1)[0]
            return f"cell ({x}, {y}) is covered by more than one pedestrian"
        diff = expected != self.occupancy.cells
        if diff.any():
            y, x = np.argwhere(diff)[0]
            return (f"cell ({x}, {y}) records owner {self.occupancy.cells[y, x]} "
                    f"but footprints imply {expected[y, x]}")
        return None

    def pedestrian(self, i: int) -> Pedestrian:
        return self.population.pedestrian(i)

    def live_fields(self, i: int) -> list[FieldSpec]:
        return [self.population.field_for(k, i) for k in self.population.fields]

    def cells_of(self, i: int) -> frozenset[SuIndex]:
        pop = self.population
        return footprint_cells(self.geometry, (int(pop.x[i]), int(pop.y[i])), pop.footprint)[0]

    def copy(self) -> SimState:
        return SimState(
            self.geometry,
            self.occupancy.copy(),
            self.population.copy(),
            {k: v.copy() for k, v in self.images.items()},
            list(self.static_fields),
            self.tick,
            self.rng_seed,
            copy.deepcopy(self.scratch),
        )

    def digest(self) -> bytes:
        """Bitwise fingerprint of occupancy and every strength image."""
        h = hashlib.sha256()
        h.update(self.occupancy.cells.tobytes())
        for key in sorted(self.images):
            h.update(key.encode())
            h.update(self.images[key].view(np.uint32).tobytes())
        return h.digest()


def empty_images(g: GridGeometry, fields) -> dict[str, np.ndarray]:
    images = {STATIC: new_image(g)}
    for kind in fields:
        images[kind.value] = new_image(g)
    return images
