"""Optimal offline schedule when both channel gains stay fixed over the horizon.

With identical slots, the executed bits are constant within each transition
interval. A forward search over running averages of the arrivals finds the
intervals; one level per interval then splits that constant between local
computing and offloading. Spreading the required ET energy uniformly over the
horizon is optimal because consumption never decreases from slot to slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    AllocationPlan,
    Mode,
    SystemParams,
    TaskTrace,
    bits_of_level,
    slot_energy,
    solve_level,
)


@dataclass(frozen=True)
class TransitionSchedule:
    """Transition slots (1-based, last one is N) and the level of each interval."""

    transition_slots: tuple[int, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        slots = tuple(int(s) for s in self.transition_slots)
        if not slots or any(b <= a for a, b in zip(slots, slots[1:])) or slots[0] < 1:
            raise ValueError("transition slots must be strictly increasing and >= 1")
        if len(self.levels) != len(slots):
            raise ValueError("need one level per interval")
        object.__setattr__(self, "transition_slots", slots)
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))

    @property
    def intervals(self) -> list[tuple[int, int]]:
        """0-based half-open slot ranges, one per interval."""
        starts = (0,) + self.transition_slots[:-1]
        return list(zip(starts, self.transition_slots))

    def slot_levels(self) -> np.ndarray:
        out = np.empty(self.transition_slots[-1])
        for (lo, hi), lvl in zip(self.intervals, self.levels):
            out[lo:hi] = lvl
        return out


def forward_search_averages(arrivals) -> list[int]:
    """Transition slots from minimum running averages of the arrivals.

    Ties go to the largest index, which merges intervals of equal average.
    """
    arrivals = np.asarray(arrivals, dtype=float)
    n = arrivals.size
    transitions = []
    prev = 0
    while prev < n:
        avg = np.cumsum(arrivals[prev:]) / np.arange(1, n - prev + 1)
        best = avg.min()
        pick = int(np.flatnonzero(avg <= best)[-1])
        prev = prev + pick + 1
        transitions.append(prev)
    return transitions


def uniform_power(local_bits, offl_bits, h: float, g: float, params: SystemParams) -> np.ndarray:
    """Equal per-slot power whose total harvest equals total consumption."""
    local_bits = np.asarray(local_bits, dtype=float)
    n = local_bits.size
    demand = np.sum(slot_energy(local_bits, np.asarray(offl_bits, dtype=float), g, params))
    p = demand / (params.slot_len * params.eh_efficiency * h * n)
    return np.full(n, p)


def solve_static(tasks: TaskTrace, h: float, g: float, params: SystemParams,
                 mode: Mode = Mode.JOINT) -> tuple[AllocationPlan, TransitionSchedule]:
    """Optimal offline plan for constant gains ``h`` (WPT) and ``g`` (offloading)."""
    mode = Mode(mode)
    arrivals = tasks.arrivals
    n = arrivals.size
    local = np.zeros(n)
    offl = np.zeros(n)
    slot_lv = np.zeros(n)
    levels = []
    transitions = forward_search_averages(arrivals)
    prev = 0
    for pi in transitions:
        per_slot = float(np.sum(arrivals[prev:pi])) / (pi - prev)
        level = solve_level(per_slot, h, g, params, mode)
        loc, off = bits_of_level(level, h, g, params, mode)
        local[prev:pi] = loc
        offl[prev:pi] = off
        slot_lv[prev:pi] = level
        levels.append(level)
        prev = pi
    power = uniform_power(local, offl, h, g, params)
    plan = AllocationPlan(power, local, offl, slot_lv)
    return plan, TransitionSchedule(tuple(transitions), tuple(levels))
