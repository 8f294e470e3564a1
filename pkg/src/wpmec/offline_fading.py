"""Optimal offline schedule over time-varying channels.

Energy is only ever sent at causality dominating slots (CDSs), the slots whose
WPT gain beats every earlier one; each CDS pays for the consumption of the
slots up to the next CDS. That turns the ET objective into a weighted sum of
user energies with weights ``1 / (eta * h')``, where ``h'`` is the running
maximum of the WPT gain. The task allocation is then found by a forward search
over transition slots, solving one single-level subproblem per candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    AllocationPlan,
    ChannelTrace,
    DomainError,
    Mode,
    SystemParams,
    TaskTrace,
    bits_of_level,
    slot_energy,
    solve_levels,
)
from .offline_static import TransitionSchedule

CAUSALITY_TOL = 1e-9


@dataclass(frozen=True)
class CdsDecomposition:
    """CDS slots (1-based) and the effective WPT gain of every slot."""

    cds_slots: tuple[int, ...]
    effective_gains: np.ndarray

    def segments(self) -> list[tuple[int, int]]:
        """0-based half-open ranges served by each CDS."""
        starts = [s - 1 for s in self.cds_slots]
        ends = starts[1:] + [self.effective_gains.size]
        return list(zip(starts, ends))


def compute_cds(h) -> CdsDecomposition:
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size == 0:
        raise DomainError("empty gain sequence")
    if np.any(h <= 0):
        raise DomainError("WPT gains must be > 0")
    running = np.maximum.accumulate(h)
    # strict record: equal gains do not open a new CDS
    is_cds = np.empty(h.size, dtype=bool)
    is_cds[0] = True
    is_cds[1:] = h[1:] > running[:-1]
    return CdsDecomposition(tuple(int(i) + 1 for i in np.flatnonzero(is_cds)), running)


def cds_power(local_bits, offl_bits, channels: ChannelTrace, params: SystemParams) -> np.ndarray:
    """Cheapest ET powers for given bits: each CDS covers its own segment exactly."""
    h = channels.wpt_gain
    demand = slot_energy(np.asarray(local_bits, float), np.asarray(offl_bits, float),
                         channels.offl_gain, params)
    power = np.zeros(h.size)
    for lo, hi in compute_cds(h).segments():
        power[lo] = np.sum(demand[lo:hi]) / (params.slot_len * params.eh_efficiency * h[lo])
    return power


@dataclass(frozen=True)
class SubproblemSolution:
    local_bits: np.ndarray
    offl_bits: np.ndarray
    level: float
    energy: float


def _interval_energy(local, offl, h_eff, g, params):
    return float(np.sum(slot_energy(local, offl, g, params) / (params.eh_efficiency * h_eff)))


def solve_sp(start: int, end: int, tasks: TaskTrace, channels: ChannelTrace,
             params: SystemParams, mode: Mode = Mode.JOINT) -> SubproblemSolution:
    """Single-level allocation of slots ``start..end`` (1-based, inclusive)
    that executes exactly the bits arriving in that range."""
    n = len(tasks)
    if not 1 <= start <= end <= n:
        raise DomainError(f"bad interval [{start}, {end}] for {n} slots")
    h_eff = compute_cds(channels.wpt_gain).effective_gains[start - 1:end]
    g = channels.offl_gain[start - 1:end]
    target = float(np.sum(tasks.arrivals[start - 1:end]))
    level = float(solve_levels([target], np.ones((1, h_eff.size)), h_eff, g, params, mode)[0])
    loc, off = bits_of_level(level, h_eff, g, params, mode)
    loc = np.broadcast_to(loc, h_eff.shape).copy()
    off = np.broadcast_to(off, h_eff.shape).copy()
    return SubproblemSolution(loc, off, level, _interval_energy(loc, off, h_eff, g, params))


def _candidate_levels(arrivals, h_eff, g, params, mode):
    """Level of the subproblem ending at each candidate slot (start fixed at 0)."""
    m = arrivals.size
    types, inverse = np.unique(np.stack([h_eff, g], axis=1), axis=0, return_inverse=True)
    counts = np.zeros((m, len(types)))
    counts[np.arange(m), inverse.reshape(-1)] = 1.0
    np.cumsum(counts, axis=0, out=counts)
    targets = np.cumsum(arrivals)
    return solve_levels(targets, counts, types[:, 0], types[:, 1], params, mode)


def forward_search(arrivals, h_eff, g, params: SystemParams, mode: Mode = Mode.JOINT):
    """Transition-slot forward search on effective gains.

    For each interval start, every candidate end slot gets its subproblem
    solved; candidates whose allocation respects task causality inside the
    interval are feasible and the largest one becomes the next transition.
    Returns ``(local, offl, slot_levels, schedule)``.
    """
    mode = Mode(mode)
    arrivals = np.asarray(arrivals, dtype=float)
    h_eff = np.asarray(h_eff, dtype=float)
    g = np.asarray(g, dtype=float)
    n = arrivals.size
    local = np.zeros(n)
    offl = np.zeros(n)
    slot_lv = np.zeros(n)
    transitions, levels = [], []
    prev = 0
    while prev < n:
        a, h, gg = arrivals[prev:], h_eff[prev:], g[prev:]
        m = a.size
        cand_lv = _candidate_levels(a, h, gg, params, mode)
        loc, off = bits_of_level(cand_lv[:, None], h[None, :], gg[None, :], params, mode)
        lower = np.tri(m, dtype=bool)
        executed = np.cumsum(np.where(lower, loc + off, 0.0), axis=1)
        arrived = np.cumsum(a)
        slack_tol = CAUSALITY_TOL * (1.0 + arrived)[:, None]
        ok = (executed <= arrived[None, :] + slack_tol) | ~lower
        feasible = np.flatnonzero(ok.all(axis=1))
        # a one-slot interval executes exactly its own arrivals
        assert feasible.size and feasible[0] == 0, "no feasible transition candidate"
        pick = int(feasible[-1])
        stop = prev + pick + 1
        local[prev:stop] = loc[pick, :pick + 1]
        offl[prev:stop] = off[pick, :pick + 1]
        slot_lv[prev:stop] = cand_lv[pick]
        transitions.append(stop)
        levels.append(float(cand_lv[pick]))
        prev = stop
    return local, offl, slot_lv, TransitionSchedule(tuple(transitions), tuple(levels))


def solve_fading(tasks: TaskTrace, channels: ChannelTrace, params: SystemParams,
                 mode: Mode = Mode.JOINT) -> tuple[AllocationPlan, TransitionSchedule]:
    if len(tasks) != len(channels):
        raise DomainError("task and channel traces differ in length")
    h_eff = compute_cds(channels.wpt_gain).effective_gains
    local, offl, slot_lv, schedule = forward_search(
        tasks.arrivals, h_eff, channels.offl_gain, params, mode)
    power = cds_power(local, offl, channels, params)
    return AllocationPlan(power, local, offl, slot_lv), schedule
