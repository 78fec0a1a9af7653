"""Scenario files, population seeding, metrics files.

Scenario files are line-oriented ``key = value`` documents; ``#`` starts a
comment. Every key has a default, so ``grid = 100x100`` alone is a valid
scenario. ``static_field`` may repeat, one static field per line::

    format_version = 1
    grid = 64x64
    density = 0.5
    directions = eight
    static_field = omni_repulsive 3x3 1.0 -0.5 @ 10,12
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .accumulator import CHUNK_WIDTHS
from .engine.pipeline import REGULATIONS, EngineConfig, TickMetrics
from .engine.state import Population, SimState
from .fields import DYNAMIC_KINDS, FieldKind, FieldSpec
from .grid import Boundary, Footprint, GridGeometry, SuIndex

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
BASE_FIELD_SIZE = 7
RETRY_FACTOR = 64


class ScenarioError(ValueError):
    pass


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ScenarioConstraintError(ScenarioError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class SeedingError(RuntimeError):
    pass


class Directions(enum.Enum):
    UNI = "uni"
    BI = "bi"
    FOUR = "four"
    EIGHT = "eight"

    @property
    def sects(self) -> tuple[int, ...]:
        return {"uni": (0,), "bi": (0, 4), "four": (0, 2, 4, 6), "eight": tuple(range(8))}[self.value]


class Placement(enum.Enum):
    AUTO = "auto"
    RANDOM = "random"
    LATTICE = "lattice"


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridGeometry = GridGeometry(100, 100)
    density: float = 0.5
    directions: Directions = Directions.EIGHT
    field_geometry: Footprint = Footprint(7, 7)
    pedestrian_geometry: Footprint = Footprint(1, 1)
    walk_period_min: int = 1
    walk_period_max: int = 1
    chunk_k: int = 8
    ticks: int = 100
    repeats: int = 3
    seed: int = 0
    weight_static: float = 1.0
    weight_dir_attractive: float = 1.0
    weight_dir_repulsive: float = 1.0
    weight_recurrent: float = 1.0
    goal_bias: float = 1.0
    field_gain: float = 1.0
    field_decay: float = -0.5
    cone: int = 1
    density_radius: int = 3
    regulation: str = "identity"
    check_interval: int = 50
    placement: Placement = Placement.AUTO
    static_fields: tuple[tuple[FieldSpec, SuIndex], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0 < self.density <= 1:
            raise ScenarioConstraintError("density", f"must lie in (0, 1], got {self.density}")
        if not 1 <= self.walk_period_min <= self.walk_period_max:
            raise ScenarioConstraintError("walk_period_min", "need 1 <= walk_period_min <= walk_period_max")
        if self.chunk_k not in CHUNK_WIDTHS:
            raise ScenarioConstraintError("chunk_k", f"must be one of {CHUNK_WIDTHS}")
        for name in ("ticks", "check_interval", "density_radius", "seed"):
            if getattr(self, name) < 0:
                raise ScenarioConstraintError(name, "must be non-negative")
        if self.seed >= 2**64:
            raise ScenarioConstraintError("seed", "must fit in 64 bits")
        if self.repeats < 1:
            raise ScenarioConstraintError("repeats", "must be at least 1")
        if not 0 <= self.cone <= 4:
            raise ScenarioConstraintError("cone", "must lie in [0, 4]")
        if self.regulation not in REGULATIONS:
            raise ScenarioConstraintError("regulation", f"must be one of {sorted(REGULATIONS)}")
        if self.field_gain < 0:
            raise ScenarioConstraintError("field_gain", "must be non-negative")
        fg = self.field_geometry
        if fg.width > self.grid.width or fg.height > self.grid.height:
            raise ScenarioConstraintError("field_geometry", f"{fg} does not fit the grid")

    def field_specs(self) -> dict[FieldKind, FieldSpec]:
        return {k: FieldSpec(k, self.field_geometry, self.field_gain, self.field_decay, 0, self.cone)
                for k in DYNAMIC_KINDS}

    def engine_config(self, **overrides) -> EngineConfig:
        kw = dict(
            chunk_k=self.chunk_k,
            weight_static=self.weight_static,
            weight_dir_attractive=self.weight_dir_attractive,
            weight_dir_repulsive=self.weight_dir_repulsive,
            weight_recurrent=self.weight_recurrent,
            goal_bias=self.goal_bias,
            regulation=self.regulation,
            density_radius=self.density_radius,
            check_interval=self.check_interval,
        )
        kw.update(overrides)
        return EngineConfig(**kw)

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)


def _parse_pair(text: str) -> tuple[int, int]:
    a, sep, b = text.lower().partition("x")
    if not sep:
        raise ValueError(f"expected WxH, got {text!r}")
    return int(a), int(b)


def _parse_footprint(text: str) -> Footprint:
    return Footprint(*_parse_pair(text))


def _parse_static(text: str) -> tuple[FieldSpec, SuIndex]:
    # omni_repulsive 3x3 1.0 -0.5 @ 10,12
    spec, at, anchor = text.partition("@")
    parts = spec.split()
    if not at or len(parts) != 4:
        raise ValueError("expected 'KIND WxH GAIN DECAY @ X,Y'")
    kind = FieldKind(parts[0])
    if not kind.static:
        raise ValueError(f"{kind.value} is not a static field kind")
    x, y = (int(v) for v in anchor.split(","))
    return FieldSpec(kind, _parse_footprint(parts[1]), float(parts[2]), float(parts[3])), SuIndex(x, y)


_SCALARS = {
    "density": float,
    "walk_period_min": int,
    "walk_period_max": int,
    "chunk_k": int,
    "ticks": int,
    "repeats": int,
    "seed": int,
    "weight_static": float,
    "weight_dir_attractive": float,
    "weight_dir_repulsive": float,
    "weight_recurrent": float,
    "goal_bias": float,
    "field_gain": float,
    "field_decay": float,
    "cone": int,
    "density_radius": int,
    "regulation": str,
    "check_interval": int,
    "directions": Directions,
    "placement": Placement,
    "field_geometry": _parse_footprint,
    "pedestrian_geometry": _parse_footprint,
}

KEYS = ("format_version", "grid", "boundary", *_SCALARS, "static_field")


def parse_scenario(text: str) -> ScenarioConfig:
    values: dict[str, object] = {}
    grid_size = (100, 100)
    boundary = Boundary.PERIODIC
    statics = []
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ScenarioSyntaxError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        if key not in KEYS:
            raise ScenarioSyntaxError(lineno, f"unknown key {key!r}")
        if key in lines and key != "static_field":
            raise ScenarioSyntaxError(lineno, f"duplicate key {key!r} (first on line {lines[key]})")
        lines[key] = lineno
        try:
            if key == "format_version":
                if int(value) != FORMAT_VERSION:
                    raise ScenarioConstraintError("format_version", f"unsupported version {value}")
            elif key == "grid":
                grid_size = _parse_pair(value)
            elif key == "boundary":
                boundary = Boundary(value.lower())
            elif key == "static_field":
                statics.append(_parse_static(value))
            else:
                conv = _SCALARS[key]
                values[key] = conv(value.lower()) if isinstance(conv, type) and issubclass(conv, enum.Enum) else conv(value)
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioConstraintError(key, f"line {lineno}: {exc}") from None
    try:
        grid = GridGeometry(grid_size[0], grid_size[1], boundary)
    except ValueError as exc:
        raise ScenarioConstraintError("grid", str(exc)) from None
    return ScenarioConfig(grid=grid, static_fields=tuple(statics), **values)


def load_scenario(path: str | os.PathLike) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def serialize_scenario(cfg: ScenarioConfig) -> str:
    out = [
        f"format_version = {FORMAT_VERSION}",
        f"grid = {cfg.grid.width}x{cfg.grid.height}",
        f"boundary = {cfg.grid.boundary.value}",
    ]
    for key in _SCALARS:
        v = getattr(cfg, key)
        if isinstance(v, enum.Enum):
            v = v.value
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{key} = {v}")
    for f, anchor in cfg.static_fields:
        out.append(f"static_field = {f.kind.value} {f.geometry} {f.gain!r} {f.decay!r} @ {anchor.x},{anchor.y}")
    return "\n".join(out) + "\n"


def population_count(cfg: ScenarioConfig) -> int:
    """``floor(density * cells / footprint area)``, computed in exact arithmetic."""
    density = Fraction(str(cfg.density))
    return int(density * cfg.grid.cells // cfg.pedestrian_geometry.area)


def scale_fields(cfg: ScenarioConfig, ratio: int) -> Footprint:
    """Field geometry ``(7 * ratio) x (7 * ratio)`` for an odd ratio."""
    if ratio < 1 or ratio % 2 == 0:
        raise ScenarioConstraintError("ratio", f"must be an odd positive integer, got {ratio}")
    return Footprint(BASE_FIELD_SIZE * ratio, BASE_FIELD_SIZE * ratio)


def _place_random(cfg: ScenarioConfig, count: int, rng: np.random.Generator) -> np.ndarray | None:
    g = cfg.grid
    fp = cfg.pedestrian_geometry
    if fp.area == 1:
        flat = rng.choice(g.cells, size=count, replace=False)
        return np.stack([flat % g.width, flat // g.width], axis=1)
    hw, hh = fp.half_width, fp.half_height
    taken = np.zeros(g.shape, dtype=bool)
    centers = []
    budget = RETRY_FACTOR * count
    # Closed lattices only accept centers whose footprint stays inside.
    lo_x, hi_x = (0, g.width) if g.periodic else (hw, g.width - hw)
    lo_y, hi_y = (0, g.height) if g.periodic else (hh, g.height - hh)
    if hi_x <= lo_x or hi_y <= lo_y:
        return None
    while len(centers) < count and budget > 0:
        budget -= 1
        cx = int(rng.integers(lo_x, hi_x))
        cy = int(rng.integers(lo_y, hi_y))
        ys = np.arange(cy - hh, cy + hh + 1) % g.height
        xs = np.arange(cx - hw, cx + hw + 1) % g.width
        block = np.ix_(ys, xs)
        if taken[block].any():
            continue
        taken[block] = True
        centers.append((cx, cy))
    if len(centers) < count:
        return None
    return np.array(centers, dtype=np.int64).reshape(-1, 2)


def _place_lattice(cfg: ScenarioConfig, count: int, rng: np.random.Generator) -> np.ndarray | None:
    """Random subset of a footprint-sized block tiling with a random origin."""
    g = cfg.grid
    fp = cfg.pedestrian_geometry
    nbx, nby = g.width // fp.width, g.height // fp.height
    if nbx * nby < count:
        return None
    ox = int(rng.integers(0, g.width - nbx * fp.width + 1)) if not g.periodic else int(rng.integers(0, g.width))
    oy = int(rng.integers(0, g.height - nby * fp.height + 1)) if not g.periodic else int(rng.integers(0, g.height))
    blocks = rng.choice(nbx * nby, size=count, replace=False)
    cx = ox + (blocks % nbx) * fp.width + fp.half_width
    cy = oy + (blocks // nbx) * fp.height + fp.half_height
    if g.periodic:
        cx, cy = cx % g.width, cy % g.height
    return np.stack([cx, cy], axis=1)


def seed_population(cfg: ScenarioConfig) -> SimState:
    g = cfg.grid
    sects = cfg.directions.sects
    if Fraction(str(cfg.density)) * g.cells < len(sects):
        raise SeedingError(
            f"density {cfg.density} on {g.width}x{g.height} gives fewer occupied cells than "
            f"the {len(sects)} direction groups"
        )
    count = population_count(cfg)
    rng = np.random.default_rng(cfg.seed)
    fields = cfg.field_specs()
    if count == 0:
        return SimState.from_population(g, Population.empty(cfg.pedestrian_geometry, fields),
                                        list(cfg.static_fields), cfg.seed)
    centers = None
    if cfg.placement in (Placement.AUTO, Placement.RANDOM):
        centers = _place_random(cfg, count, rng)
        if centers is None and cfg.placement is Placement.AUTO:
            log.warning("rejection sampling could not place %d pedestrians; using block-lattice placement", count)
    if centers is None and cfg.placement in (Placement.AUTO, Placement.LATTICE):
        centers = _place_lattice(cfg, count, rng)
    if centers is None:
        raise SeedingError(f"could not place {count} pedestrians of {cfg.pedestrian_geometry} on "
                           f"{g.width}x{g.height}")
    ids = np.arange(count, dtype=np.int64)
    period = rng.integers(cfg.walk_period_min, cfg.walk_period_max + 1, size=count).astype(np.int32)
    pop = Population(
        ids=ids,
        x=centers[:, 0].astype(np.int32),
        y=centers[:, 1].astype(np.int32),
        period=period,
        phase=(ids % period).astype(np.int32),
        goal=np.array(sects, dtype=np.int8)[ids % len(sects)],
        footprint=cfg.pedestrian_geometry,
        fields=fields,
    )
    try:
        return SimState.from_population(g, pop, list(cfg.static_fields), cfg.seed)
    except ValueError as exc:
        raise SeedingError(str(exc)) from None


METRIC_COLUMNS = ("tick", "k1_us", "k2_us", "k3_us", "k4_us", "k5_us", "moved", "wall_us")


def write_metrics(stream: Iterable[TickMetrics], destination) -> int:
    """Write tick metrics as CSV (durations in microseconds); returns the row count.

    ``destination`` is a path or an open text file.
    """
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", newline="", encoding="utf-8") as fh:
            return write_metrics(stream, fh)
    destination.write(f"# socialfield metrics format_version={FORMAT_VERSION}\n")
    writer = csv.writer(destination)
    writer.writerow(METRIC_COLUMNS)
    rows = 0
    for m in stream:
        writer.writerow([m.tick, *m.phase_us, m.moved, m.wall_us])
        rows += 1
    return rows


def read_metrics(source) -> list[TickMetrics]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_metrics(fh)
    lines = [ln for ln in source if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != METRIC_COLUMNS:
        raise ValueError(f"unexpected metrics header {header}")
    out = []
    for row in reader:
        v = [int(x) for x in row]
        out.append(TickMetrics(v[0], tuple(v[1:6]), v[6], v[7]))
    return out
