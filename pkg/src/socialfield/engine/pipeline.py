"""The five-phase tick: init, decide, vote, move, write back.

Every phase is a set of independent work items. k1, k3 and k5 own lattice
rows (a space unit or a ``(space unit, sect)`` address); k2 and k4 own
pedestrians. An item writes only what it owns and reads only pre-phase
state, so splitting items across any number of workers gives bit-identical
results. Phases are separated by a barrier (the executor join).

k5 is a gather: each ``(su, sect)`` address walks the precomputed
contributor list of its write plan, reads the movement log at each candidate
center, and streams the resulting terms through a K-wide step cache.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

import numpy as np

from ..accumulator import check_chunk_width, multi_step_sum
from ..fields import N_SECTS, SECT_STEPS, FieldKind, FieldSpec, build_write_plan, sect_distance, strength_at
from ..grid import EMPTY, Footprint, GridGeometry, local_density_map, pad_lattice, wrap
from .sorting import sort8_desc
from .state import STATIC, STILL, IntegrityError, Scratch, SimState

PHASES = ("k1_init", "k2_decide", "k3_vote", "k4_move", "k5_writeback")

IMAGE_TOLERANCE = 1e-4


class Mode(enum.Enum):
    SEQUENTIAL = "seq"
    PARALLEL = "par"


REGULATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": lambda rho: np.ones_like(rho, dtype=np.float32),
    "linear": lambda rho: np.maximum(np.float32(0.1), np.float32(1.0) - rho).astype(np.float32),
}


@dataclass(frozen=True)
class EngineConfig:
    chunk_k: int = 8
    weight_static: float = 1.0
    weight_dir_attractive: float = 1.0
    weight_dir_repulsive: float = 1.0
    weight_recurrent: float = 1.0
    goal_bias: float = 1.0
    regulation: str = "identity"
    density_radius: int = 3
    # Ticks between image rebuilds (with a drift check); 0 disables.
    check_interval: int = 50
    # Test hook: in parallel mode, vote by lowest id before score.
    fault_vote_order: bool = False

    def __post_init__(self):
        check_chunk_width(self.chunk_k)
        if self.regulation not in REGULATIONS:
            raise ValueError(f"unknown regulation {self.regulation!r}; choose from {sorted(REGULATIONS)}")
        if self.density_radius < 0 or self.check_interval < 0:
            raise ValueError("density_radius and check_interval must be non-negative")

    def weight(self, kind: FieldKind) -> float:
        return {
            FieldKind.DIR_ATTRACTIVE: self.weight_dir_attractive,
            FieldKind.DIR_REPULSIVE: self.weight_dir_repulsive,
            FieldKind.RECURRENT_REPULSIVE: self.weight_recurrent,
        }[kind]


@dataclass
class TickMetrics:
    tick: int
    phase_us: tuple[int, int, int, int, int]
    moved: int
    wall_us: int


class GatherEntry(NamedTuple):
    slot: int
    cx: int
    cy: int
    orientation: int  # -1 for orientation-free kinds
    weight: np.float32


@dataclass(frozen=True)
class KindGather:
    """Per-sect contributor streams for one dynamic field template.

    Directional templates concatenate the plans of all eight orientations;
    a slot only fires when the pedestrian at its center has that orientation.
    """

    kind: FieldKind
    entries: tuple[tuple[GatherEntry, ...], ...]
    stream_len: tuple[int, ...]
    reach: tuple[int, int]

    @classmethod
    def build(cls, spec: FieldSpec) -> KindGather:
        orientations = range(N_SECTS) if spec.kind.directional else [-1]
        per_sect: list[list[GatherEntry]] = [[] for _ in range(N_SECTS)]
        for r in orientations:
            plan = build_write_plan(spec.oriented(r) if r >= 0 else spec)
            for s in range(N_SECTS):
                base = len(per_sect[s])
                for c in plan.contributors[s]:
                    per_sect[s].append(
                        GatherEntry(base + c.slot, c.center_offset[0], c.center_offset[1], r, np.float32(c.magnitude))
                    )
        g = spec.geometry
        return cls(spec.kind, tuple(tuple(e) for e in per_sect), tuple(len(e) for e in per_sect),
                   (g.half_height, g.half_width))


def goal_bias_table(b: float) -> np.ndarray:
    """``bias[goal, sect] = b * max(0, cos(45 deg * distance))``, exactly zero from 90 degrees on."""
    table = np.zeros((N_SECTS, N_SECTS), dtype=np.float32)
    for goal in range(N_SECTS):
        for s in range(N_SECTS):
            d = sect_distance(goal, s)
            table[goal, s] = b * math.cos(math.radians(45.0 * d)) if d < 2 else 0.0
    return table


def footprint_moves(f: Footprint) -> tuple[list[list[tuple[int, int]]], list[list[tuple[int, int]]]]:
    """Per sect, offsets (from the old center) newly covered and vacated by a one-step move."""
    old = set(f.offsets())
    new_cells, vacated = [], []
    for sx, sy in SECT_STEPS:
        moved = {(dx + sx, dy + sy) for dx, dy in old}
        new_cells.append(sorted(moved - old))
        vacated.append(sorted(old - moved))
    return new_cells, vacated


def _partition(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n)) if n else 1
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


class Engine:
    """Runs ticks in sequential or parallel mode.

    Sequential mode handles each phase as a single partition on the calling
    thread. Parallel mode splits every phase into ``workers`` partitions and
    runs them on a thread pool.
    """

    def __init__(self, config: EngineConfig | None = None, mode: Mode | str = Mode.SEQUENTIAL, workers: int = 1):
        self.config = config or EngineConfig()
        self.mode = Mode(mode)
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = workers if self.mode is Mode.PARALLEL else 1
        self._pool = ThreadPoolExecutor(self.workers) if self.mode is Mode.PARALLEL else None
        self._gathers: dict[FieldSpec, KindGather] = {}
        self._moves: dict[Footprint, tuple] = {}
        self._bias = goal_bias_table(self.config.goal_bias)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self) -> Engine:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- helpers ---------------------------------------------------------

    def _map(self, fn: Callable[[int, int], object], n: int) -> list:
        parts = _partition(n, self.workers)
        if self._pool is None:
            return [fn(a, b) for a, b in parts]
        return list(self._pool.map(lambda ab: fn(*ab), parts))

    def gather(self, spec: FieldSpec) -> KindGather:
        if spec not in self._gathers:
            self._gathers[spec] = KindGather.build(spec)
        return self._gathers[spec]

    def moves(self, f: Footprint):
        if f not in self._moves:
            self._moves[f] = footprint_moves(f)
        return self._moves[f]

    def _cells(self, g: GridGeometry, xs: np.ndarray, ys: np.ndarray, dx: int, dy: int):
        """Wrapped coordinates plus an in-bounds mask (all True when periodic)."""
        ux, uy = xs + dx, ys + dy
        if g.periodic:
            return ux % g.width, uy % g.height, None
        inside = (ux >= 0) & (ux < g.width) & (uy >= 0) & (uy < g.height)
        return ux.clip(0, g.width - 1), uy.clip(0, g.height - 1), inside

    # -- phases ----------------------------------------------------------

    def k1_init(self, s: SimState) -> None:
        k = self.config.chunk_k
        n = len(s.population)
        sc = s.scratch
        if sc is None or sc.k != k or sc.winner.shape != s.geometry.shape or len(sc.direction) != n:
            s.scratch = sc = Scratch(s.geometry, n, k)

        def rows(a, b):
            sc.enroll_id[a:b] = EMPTY
            sc.enroll_score[a:b] = 0
            sc.winner[a:b] = EMPTY
            sc.moved_from[a:b] = EMPTY
            sc.moved_to[a:b] = EMPTY
            sc.partials[:, a:b] = 0

        def peds(a, b):
            sc.direction[a:b] = STILL
            sc.score[a:b] = 0
            sc.moved[a:b] = False

        self._map(rows, s.geometry.height)
        self._map(peds, n)

    def scores(self, s: SimState, a: int, b: int) -> np.ndarray:
        """Perceived score of each of the 8 sects for pedestrians ``a:b``.

        Images are sampled at the pedestrian's center; a field has no strength
        at its own center, so this is already the environment minus self.
        """
        cfg = self.config
        pop = s.population
        x, y = pop.x[a:b], pop.y[a:b]
        env = np.float32(cfg.weight_static) * s.images[STATIC][y, x]
        for kind in pop.fields:
            env = env + np.float32(cfg.weight(kind)) * s.images[kind.value][y, x]
        if cfg.regulation != "identity":
            rho = self._density[y, x]
            env = REGULATIONS[cfg.regulation](rho)[:, None] * env
        return env + self._bias[pop.goal[a:b]]

    def k2_decide(self, s: SimState) -> None:
        cfg = self.config
        g = s.geometry
        pop = s.population
        sc = s.scratch
        occ = s.occupancy.cells
        new_off, _ = self.moves(pop.footprint)
        if cfg.regulation != "identity":
            self._density = local_density_map(occ != EMPTY, cfg.density_radius, g.boundary)

        def items(a, b):
            if a == b:
                return
            idx = np.arange(a, b)
            score = self.scores(s, a, b)
            order = sort8_desc(score)
            feasible = np.ones((b - a, N_SECTS), dtype=bool)
            for sect in range(N_SECTS):
                for dx, dy in new_off[sect]:
                    ux, uy, inside = self._cells(g, pop.x[a:b], pop.y[a:b], dx, dy)
                    ok = occ[uy, ux] == EMPTY
                    feasible[:, sect] &= ok if inside is None else ok & inside
            gate = (s.tick % pop.period[a:b]) == pop.phase[a:b]
            choice = np.full(b - a, STILL, dtype=np.int8)
            open_ = gate.copy()
            rows = np.arange(b - a)
            for rank in range(N_SECTS):
                cand = order[:, rank]
                take = open_ & feasible[rows, cand] & (score[rows, cand] > 0)
                choice[take] = cand[take]
                open_ &= ~take
            sc.direction[a:b] = choice
            sc.score[a:b] = np.where(choice >= 0, score[rows, choice.clip(0)], np.float32(0))
            for sect in range(N_SECTS):
                sel = choice == sect
                if not sel.any():
                    continue
                who = idx[sel]
                for dx, dy in new_off[sect]:
                    ux, uy, _ = self._cells(g, pop.x[who], pop.y[who], dx, dy)
                    if (sc.enroll_id[uy, ux, sect] != EMPTY).any() or len(np.unique(uy * g.width + ux)) < len(who):
                        raise IntegrityError(f"enrollment slot collision at sect {sect}", s.tick, "k2_decide")
                    sc.enroll_id[uy, ux, sect] = who
                    sc.enroll_score[uy, ux, sect] = sc.score[who]

        self._map(items, len(pop))

    def k3_vote(self, s: SimState) -> None:
        sc = s.scratch
        swap_keys = self.config.fault_vote_order and self.mode is Mode.PARALLEL
        big = np.iinfo(np.int32).max

        def rows(a, b):
            ids = sc.enroll_id[a:b]
            valid = ids != EMPTY
            if swap_keys:
                pick = np.where(valid, ids, big).min(axis=2)
            else:
                score = np.where(valid, sc.enroll_score[a:b], -np.inf)
                best = score.max(axis=2, keepdims=True)
                pick = np.where(valid & (score == best), ids, big).min(axis=2)
            sc.winner[a:b] = np.where(valid.any(axis=2), pick, EMPTY)

        self._map(rows, s.geometry.height)

    def k4_move(self, s: SimState) -> None:
        g = s.geometry
        pop = s.population
        sc = s.scratch
        occ = s.occupancy.cells
        new_off, vacated = self.moves(pop.footprint)

        def items(a, b):
            idx = np.arange(a, b)
            d = sc.direction[a:b]
            for sect in range(N_SECTS):
                who = idx[d == sect]
                if who.size == 0:
                    continue
                won = np.ones(who.size, dtype=bool)
                for dx, dy in new_off[sect]:
                    ux, uy, _ = self._cells(g, pop.x[who], pop.y[who], dx, dy)
                    won &= sc.winner[uy, ux] == who
                who = who[won]
                if who.size == 0:
                    continue
                x0, y0 = pop.x[who], pop.y[who]
                for dx, dy in vacated[sect]:
                    ux, uy, _ = self._cells(g, x0, y0, dx, dy)
                    occ[uy, ux] = EMPTY
                for dx, dy in new_off[sect]:
                    ux, uy, _ = self._cells(g, x0, y0, dx, dy)
                    occ[uy, ux] = who
                sx, sy = SECT_STEPS[sect]
                x1, y1, _ = self._cells(g, x0, y0, sx, sy)
                sc.moved_from[y0, x0] = who
                sc.moved_to[y1, x1] = who
                pop.x[who] = x1
                pop.y[who] = y1
                sc.moved[who] = True

        self._map(items, len(pop))

    def _movement_masks(self, s: SimState, ry: int, rx: int) -> dict[int, np.ndarray]:
        """Padded ``moved_to - moved_from`` indicator lattices keyed by orientation (-1 = any)."""
        g = s.geometry
        sc = s.scratch
        goal = s.population.goal
        diff = np.zeros((N_SECTS,) + g.shape, dtype=np.float32)
        for log, sign in ((sc.moved_to, 1.0), (sc.moved_from, -1.0)):
            ys, xs = np.nonzero(log != EMPTY)
            diff[goal[log[ys, xs]], ys, xs] += np.float32(sign)
        masks = {r: pad_lattice(diff[r], ry, rx, g.boundary) for r in range(N_SECTS) if diff[r].any()}
        if masks:
            masks[-1] = pad_lattice(diff.sum(axis=0, dtype=np.float32), ry, rx, g.boundary)
        return masks

    def k5_writeback(self, s: SimState) -> None:
        g = s.geometry
        pop = s.population
        sc = s.scratch
        k = self.config.chunk_k
        gathers = [self.gather(spec) for spec in pop.fields.values()]
        if not gathers:
            return
        ry = max(t.reach[0] for t in gathers)
        rx = max(t.reach[1] for t in gathers)
        masks = self._movement_masks(s, ry, rx)
        if not masks:
            return
        w = g.width

        def rows(a, b):
            if a == b:
                return
            cache = sc.partials[:, a:b]
            term = np.empty((b - a, w), dtype=np.float32)
            for table in gathers:
                image = s.images[table.kind.value]
                for sect in range(N_SECTS):
                    cache[:] = 0
                    for e in table.entries[sect]:
                        src = masks.get(e.orientation)
                        if src is None:
                            continue
                        oy, ox = a + e.cy + ry, e.cx + rx
                        np.multiply(src[oy : oy + b - a, ox : ox + w], e.weight, out=term)
                        cache[e.slot % k] += term
                    total = cache[0].copy()
                    for j in range(1, k):
                        total += cache[j]
                    image[a:b, :, sect] += total

        self._map(rows, g.height)

    # -- driving ---------------------------------------------------------

    def check_input(self, s: SimState) -> None:
        problem = s.occupancy_problem()
        if problem:
            raise IntegrityError(f"inconsistent state: {problem}", s.tick, "input")

    def iter_phases(self, s: SimState) -> Iterator[tuple[str, int]]:
        """Advance ``s`` one tick, yielding ``(phase, microseconds)`` after each phase."""
        self.check_input(s)
        for name in PHASES:
            t0 = time.perf_counter_ns()
            getattr(self, name)(s)
            yield name, (time.perf_counter_ns() - t0) // 1000
        s.tick += 1
        n = self.config.check_interval
        if n and s.tick % n == 0:
            rebuild_images(s)

    def tick(self, s: SimState) -> TickMetrics:
        t0 = time.perf_counter_ns()
        phase_us = tuple(us for _, us in self.iter_phases(s))
        moved = int(s.scratch.moved.sum())
        return TickMetrics(s.tick - 1, phase_us, moved, (time.perf_counter_ns() - t0) // 1000)

    def run(self, s0: SimState, ticks: int, copy: bool = True,
            on_tick: Callable[[SimState, TickMetrics], None] | None = None) -> tuple[SimState, list[TickMetrics]]:
        if ticks < 0:
            raise ValueError("ticks must be non-negative")
        s = s0.copy() if copy else s0
        metrics = []
        for _ in range(ticks):
            m = self.tick(s)
            metrics.append(m)
            if on_tick is not None:
                on_tick(s, m)
        return s, metrics


def image_drift(s: SimState) -> float:
    """Largest absolute difference between incremental and from-scratch dynamic images."""
    worst = 0.0
    for kind, fresh in s.rasterize_dynamic64().items():
        worst = max(worst, float(np.abs(s.images[kind.value].astype(np.float64) - fresh).max(initial=0.0)))
    return worst


def rebuild_images(s: SimState, tolerance: float = IMAGE_TOLERANCE) -> float:
    """Check incremental drift against a rebuild, then adopt the rebuilt images."""
    fresh = s.rasterize_dynamic64()
    worst = 0.0
    for kind, acc in fresh.items():
        worst = max(worst, float(np.abs(s.images[kind.value].astype(np.float64) - acc).max(initial=0.0)))
    if worst > tolerance:
        raise IntegrityError(f"strength image drifted by {worst:.3g} (limit {tolerance:g})", s.tick, "rebuild")
    for kind, acc in fresh.items():
        s.images[kind.value] = acc.astype(np.float32)
    return worst


def k3_vote(su, table) -> int | None:
    """Winner among an address's registrants: highest score, then lowest id.

    ``table`` is an iterable of ``(pedestrian id, score)`` pairs.
    """
    entries = list(table)
    if len(entries) > N_SECTS:
        raise IntegrityError(f"{len(entries)} registrants at {tuple(su)}, at most 8 allowed")
    if not entries:
        return None
    return min(entries, key=lambda e: (-e[1], e[0]))[0]


def k5_address_terms(s: SimState, kind: FieldKind, su: tuple[int, int], sect: int, table: KindGather) -> np.ndarray:
    """Term stream for one ``(su, sect)`` address, read straight from the movement log.

    Independent of the vectorized write-back: magnitudes come from
    :func:`strength_at` on the owner's own field.
    """
    g = s.geometry
    sc = s.scratch
    pop = s.population
    terms = np.zeros(table.stream_len[sect], dtype=np.float32)
    for e in table.entries[sect]:
        c = wrap(g, (su[0] + e.cx, su[1] + e.cy))
        if c is None:
            continue
        for log, sign in ((sc.moved_from, -1.0), (sc.moved_to, 1.0)):
            q = int(log[c.y, c.x])
            if q == EMPTY or (e.orientation >= 0 and pop.goal[q] != e.orientation):
                continue
            vec = strength_at(pop.field_for(kind, q), c, su, g)
            terms[e.slot] += np.float32(sign * float(np.hypot(*vec)))
    return terms


def k5_writeback(su: tuple[int, int], sect: int, s: SimState, table: KindGather, k: int, before: np.ndarray) -> np.float32:
    """Updated value of ``image[su, sect]`` given the pre-write-back image ``before``."""
    delta = multi_step_sum(k5_address_terms(s, table.kind, su, sect, table), k)
    return np.float32(before[su[1], su[0], sect] + np.float32(delta))


def tick(s: SimState, config: EngineConfig | None = None) -> SimState:
    with Engine(config) as eng:
        eng.tick(s)
    return s


def run(s0: SimState, ticks: int, mode: Mode | str = Mode.SEQUENTIAL, workers: int = 1,
        config: EngineConfig | None = None) -> tuple[SimState, list[TickMetrics]]:
    with Engine(config, mode, workers) as eng:
        return eng.run(s0, ticks)
