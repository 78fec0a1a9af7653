"""Deterministic data-parallel discrete social-field pedestrian simulation."""

from .accumulator import StepCache, chunk_count, multi_step_sum, one_step_sum
from .bench import MemoryPlan, SweepSpec, cmd_bench, memory_plan
from .engine import Engine, EngineConfig, IntegrityError, Mode, Pedestrian, SimState, run, sort8_desc, tick
from .fields import FieldKind, FieldSpec, WritePlan, build_write_plan, fanout, sect_index, strength_at, support
from .grid import Boundary, Footprint, GridGeometry, OccupancyGrid, SuIndex, footprint_cells, local_density, wrap
from .scenario_io import ScenarioConfig, parse_scenario, seed_population, serialize_scenario

__version__ = "0.1.0"

__all__ = [
    "StepCache", "chunk_count", "multi_step_sum", "one_step_sum", "MemoryPlan", "SweepSpec", "cmd_bench",
    "memory_plan", "Engine", "EngineConfig", "IntegrityError", "Mode", "Pedestrian", "SimState", "run",
    "sort8_desc", "tick", "FieldKind", "FieldSpec", "WritePlan", "build_write_plan", "fanout", "sect_index",
    "strength_at", "support", "Boundary", "Footprint", "GridGeometry", "OccupancyGrid", "SuIndex",
    "footprint_cells", "local_density", "wrap", "ScenarioConfig", "parse_scenario", "seed_population",
    "serialize_scenario",
]
