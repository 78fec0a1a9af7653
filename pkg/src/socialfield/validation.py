"""Lockstep comparison of sequential and parallel runs."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import zip_longest

import numpy as np

from .engine.pipeline import Engine, EngineConfig, Mode
from .engine.state import SimState


@dataclass
class Divergence:
    tick: int
    phase: str
    what: str
    address: tuple[int, ...]

    def __str__(self) -> str:
        return f"tick {self.tick}, phase {self.phase}: {self.what} differs at {self.address}"


def _first_diff(a: np.ndarray, b: np.ndarray) -> tuple[int, ...] | None:
    if a.shape != b.shape:
        return ()
    if a.dtype.kind == "f":
        a, b = a.view(np.uint32 if a.itemsize == 4 else np.uint64), b.view(np.uint32 if b.itemsize == 4 else np.uint64)
    diff = a != b
    if not diff.any():
        return None
    return tuple(int(v) for v in np.argwhere(diff)[0])


def _phase_arrays(s: SimState, phase: str) -> dict[str, np.ndarray]:
    sc = s.scratch
    if phase == "k1_init":
        return {"enroll_id": sc.enroll_id, "moved_to": sc.moved_to}
    if phase == "k2_decide":
        return {"direction": sc.direction, "enroll_id": sc.enroll_id, "enroll_score": sc.enroll_score}
    if phase == "k3_vote":
        return {"winner": sc.winner}
    if phase == "k4_move":
        return {"occupancy": s.occupancy.cells, "moved_from": sc.moved_from, "moved_to": sc.moved_to,
                "x": s.population.x, "y": s.population.y}
    return {f"image[{k}]": v for k, v in sorted(s.images.items())}


def compare_runs(s0: SimState, ticks: int, config: EngineConfig, workers: int) -> Divergence | None:
    """Step a sequential and a parallel engine side by side from ``s0``.

    Checks the arrays each phase writes, bit for bit, and after each tick the
    full occupancy and every image. Returns the first divergence, or None.
    """
    a, b = s0.copy(), s0.copy()
    with Engine(config, Mode.SEQUENTIAL) as seq, Engine(config, Mode.PARALLEL, workers) as par:
        for _ in range(ticks):
            t = a.tick
            # zip_longest drains both generators so each finishes its tick bookkeeping
            for (pa, _), (pb, _) in zip_longest(seq.iter_phases(a), par.iter_phases(b)):
                arrays_b = _phase_arrays(b, pb)
                for name, arr in _phase_arrays(a, pa).items():
                    where = _first_diff(arr, arrays_b[name])
                    if where is not None:
                        return Divergence(t, pa, name, where)
            if a.digest() != b.digest():
                return Divergence(t, "end", "state digest", ())
    return None
