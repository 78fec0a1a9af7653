from .invariants import InvariantMonitor
from .pipeline import (
    PHASES,
    Engine,
    EngineConfig,
    KindGather,
    Mode,
    TickMetrics,
    image_drift,
    k3_vote,
    k5_address_terms,
    k5_writeback,
    rebuild_images,
    run,
    tick,
)
from .sorting import NETWORK_8, sort8_desc
from .state import STATIC, STILL, IntegrityError, Pedestrian, Population, Scratch, SimState

__all__ = [
    "InvariantMonitor", "PHASES", "Engine", "EngineConfig", "KindGather", "Mode", "TickMetrics", "image_drift", "k3_vote",
    "k5_address_terms", "k5_writeback", "rebuild_images", "run", "tick", "NETWORK_8", "sort8_desc",
    "STATIC", "STILL", "IntegrityError", "Pedestrian", "Population", "Scratch", "SimState",
]
