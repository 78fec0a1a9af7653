"""Memory planning for fan-out caches, and benchmark sweeps over scenarios."""

from __future__ import annotations

import csv
import itertools
import logging
import statistics
import time
from dataclasses import dataclass, field

from .engine.pipeline import Engine, Mode
from .fields import FieldKind, FieldSpec, build_write_plan
from .grid import Footprint, GridGeometry
from .scenario_io import Directions, ScenarioConfig, scale_fields, seed_population

log = logging.getLogger(__name__)

BYTES_PER_STRENGTH = 4
GIB = 2**30


@dataclass(frozen=True)
class MemoryPlan:
    """Buffer sizes needed to cache every fan-out slot of every sect at once."""

    fanout: int
    cells: int
    m_recur: int
    m_attra: int
    m_repul: int

    @property
    def m_total(self) -> int:
        return self.m_attra + self.m_repul + 2 * self.m_recur

    @property
    def M_total(self) -> int:
        return self.m_total * self.cells

    @property
    def M_gib(self) -> float:
        return self.M_total / GIB

    @property
    def M_gib_display(self) -> float:
        return round(self.M_gib, 1)


def memory_plan(sf: int, grid: GridGeometry) -> MemoryPlan:
    if sf < 0:
        raise ValueError("fan-out must be non-negative")
    m_recur = sf * 8 * BYTES_PER_STRENGTH
    # All field kinds share one geometry, hence one fan-out.
    return MemoryPlan(sf, grid.cells, m_recur, m_recur, m_recur)


def recurrent_fanout(geometry: Footprint, gain: float = 1.0, decay: float = -0.5) -> int:
    return build_write_plan(FieldSpec(FieldKind.RECURRENT_REPULSIVE, geometry, gain, decay)).fanout


@dataclass(frozen=True)
class BenchCase:
    grid: int
    density: float
    directions: Directions
    field_ratio: int | None  # None: follow the pedestrian geometry
    max_period: int
    ped_geom: int

    def scenario(self, base: ScenarioConfig) -> ScenarioConfig:
        ratio = self.field_ratio if self.field_ratio is not None else self.ped_geom
        return base.replace(
            grid=GridGeometry(self.grid, self.grid, base.grid.boundary),
            density=self.density,
            directions=self.directions,
            field_geometry=scale_fields(base, ratio),
            pedestrian_geometry=Footprint(self.ped_geom, self.ped_geom),
            walk_period_min=1,
            walk_period_max=self.max_period,
        )


@dataclass
class BenchRow:
    case: BenchCase
    pedestrians: int = 0
    fanout: int = 0
    ticks: int = 0
    times: list[float] = field(default_factory=list)
    status: str = "ok"
    ratio: float = float("nan")

    @property
    def mean_s(self) -> float:
        return statistics.fmean(self.times) if self.times else float("nan")

    @property
    def min_s(self) -> float:
        return min(self.times) if self.times else float("nan")

    @property
    def max_s(self) -> float:
        return max(self.times) if self.times else float("nan")

    @property
    def mean_tick_s(self) -> float:
        return self.mean_s / self.ticks if self.ticks else float("nan")


BENCH_COLUMNS = (
    "grid", "density", "directions", "field_geometry", "max_period", "ped_geom", "pedestrians", "fanout",
    "ticks", "repeats", "mean_s", "min_s", "max_s", "mean_tick_s", "ratio_to_first", "status",
)


@dataclass
class BenchReport:
    rows: list[BenchRow]

    def write(self, fh) -> None:
        w = csv.writer(fh)
        w.writerow(BENCH_COLUMNS)
        for r in self.rows:
            c = r.case
            ratio = c.field_ratio if c.field_ratio is not None else c.ped_geom
            w.writerow([
                f"{c.grid}x{c.grid}", c.density, c.directions.value, f"{7 * ratio}x{7 * ratio}", c.max_period,
                f"{c.ped_geom}x{c.ped_geom}", r.pedestrians, r.fanout, r.ticks, len(r.times),
                f"{r.mean_s:.6f}", f"{r.min_s:.6f}", f"{r.max_s:.6f}", f"{r.mean_tick_s:.6f}",
                f"{r.ratio:.4f}", r.status,
            ])


@dataclass
class SweepSpec:
    grids: list[int] = field(default_factory=lambda: [64])
    densities: list[float] = field(default_factory=lambda: [0.5])
    directions: list[Directions] = field(default_factory=lambda: [Directions.EIGHT])
    field_ratios: list[int | None] = field(default_factory=lambda: [1])
    max_periods: list[int] = field(default_factory=lambda: [1])
    ped_geoms: list[int] = field(default_factory=lambda: [1])
    ticks: int = 10
    repeats: int = 3
    warmup_ticks: int = 2
    mode: Mode = Mode.SEQUENTIAL
    workers: int = 1
    base: ScenarioConfig = field(default_factory=ScenarioConfig)

    def cases(self) -> list[BenchCase]:
        return [BenchCase(*combo) for combo in itertools.product(
            self.grids, self.densities, self.directions, self.field_ratios, self.max_periods, self.ped_geoms)]

    @classmethod
    def preset(cls, name: str, **kw) -> SweepSpec:
        """Sweep shapes: ``grid`` (grid x density x directions), ``fanout`` (field ratio),
        ``period`` (max walk period), ``combo`` (walk period x pedestrian geometry)."""
        shapes = {
            "grid": dict(grids=[32, 64, 96], densities=[0.1, 0.5, 0.9], directions=list(Directions)),
            "fanout": dict(grids=[128], field_ratios=[1, 3, 5]),
            "period": dict(grids=[128], max_periods=[1, 3, 5, 7, 9, 11]),
            "combo": dict(grids=[128], max_periods=[1, 3, 5, 7, 9, 11], ped_geoms=[1, 3, 5], field_ratios=[None]),
        }
        if name not in shapes:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(shapes)}")
        return cls(**{**shapes[name], **kw})


def bench_case(case: BenchCase, spec: SweepSpec) -> BenchRow:
    row = BenchRow(case, ticks=spec.ticks)
    cfg = case.scenario(spec.base)
    s0 = seed_population(cfg)
    row.pedestrians = len(s0.population)
    row.fanout = recurrent_fanout(cfg.field_geometry, cfg.field_gain, cfg.field_decay)
    with Engine(cfg.engine_config(), spec.mode, spec.workers) as eng:
        if spec.warmup_ticks:
            eng.run(s0, spec.warmup_ticks)
        for _ in range(spec.repeats):
            t0 = time.perf_counter()
            eng.run(s0, spec.ticks)
            row.times.append(time.perf_counter() - t0)
    return row


def cmd_bench(spec: SweepSpec) -> BenchReport:
    """Run every case ``spec.repeats`` times; a failing case is recorded and the sweep goes on."""
    if spec.repeats < 1:
        raise ValueError("repeats must be >= 1")
    rows = []
    for case in spec.cases():
        try:
            row = bench_case(case, spec)
        except Exception as exc:  # recorded per row; the sweep continues
            log.warning("bench case %s failed: %s", case, exc)
            row = BenchRow(case, ticks=spec.ticks, status=f"error: {type(exc).__name__}: {exc}")
        rows.append(row)
    ok = [r for r in rows if r.times]
    if ok:
        first = ok[0].mean_s
        for r in ok:
            r.ratio = r.mean_s / first if first > 0 else float("nan")
    return BenchReport(rows)
