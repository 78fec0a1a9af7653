"""Per-tick structural checks for driving long runs."""

from __future__ import annotations

import numpy as np

from ..fields import N_SECTS
from ..grid import EMPTY
from .pipeline import TickMetrics
from .state import SimState


class InvariantMonitor:
    """Checks each tick's outcome against the state before it.

    Pass :meth:`observe` as ``on_tick`` to :meth:`Engine.run`. Violations are
    collected as strings in :attr:`violations`; nothing is raised.
    """

    def __init__(self, s0: SimState):
        self.count = len(s0.population)
        self.area = s0.population.footprint.area
        self.periodic = s0.geometry.periodic
        self._x = s0.population.x.copy()
        self._y = s0.population.y.copy()
        self._tick = s0.tick
        self.violations: list[str] = []
        self.ticks_checked = 0

    def _fail(self, tick: int, what: str) -> None:
        self.violations.append(f"tick {tick}: {what}")

    def observe(self, s: SimState, m: TickMetrics | None = None) -> None:
        t = self._tick
        pop = s.population
        g = s.geometry
        problem = s.occupancy_problem()
        if problem:
            self._fail(t, f"overlap or stale occupancy: {problem}")
        if self.periodic:
            held = int((s.occupancy.cells != EMPTY).sum())
            if len(pop) != self.count or held != self.count * self.area:
                self._fail(t, f"conservation: {len(pop)} pedestrians holding {held} cells")
        if s.scratch is not None:
            most = int(s.scratch.registrants().max(initial=0))
            if most > N_SECTS:
                self._fail(t, f"{most} registrants at one space unit")
        dx = pop.x.astype(np.int64) - self._x
        dy = pop.y.astype(np.int64) - self._y
        if self.periodic:
            dx = (dx + g.width // 2) % g.width - g.width // 2
            dy = (dy + g.height // 2) % g.height - g.height // 2
        step = np.maximum(np.abs(dx), np.abs(dy))
        if step.size and step.max() > 1:
            self._fail(t, f"pedestrian {int(pop.ids[step.argmax()])} moved {int(step.max())} su in one tick")
        gated = (t % pop.period) != pop.phase
        if (gated & (step > 0)).any():
            i = int(np.argmax(gated & (step > 0)))
            self._fail(t, f"pedestrian {int(pop.ids[i])} moved while its walk gate was closed")
        self._x = pop.x.astype(np.int64)
        self._y = pop.y.astype(np.int64)
        self._tick = s.tick
        self.ticks_checked += 1
