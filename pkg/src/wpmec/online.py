"""Causal heuristics: re-plan the rest of the horizon every slot.

At slot ``i`` the policy treats the buffered bits plus the new arrival as the
first slot's load, forecasts every later slot with the mean arrival (and, for
time-varying channels, with mean-based gains), solves the offline problem on
that forecast and commits only the first slot's allocation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

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
    solve_level,
)
from .offline_fading import forward_search
from .offline_static import forward_search_averages

RESIDUAL_TOL = 1e-9


class InfeasiblePlanError(RuntimeError):
    """An online policy produced a buffer or battery below zero."""


@dataclass
class OnlineState:
    """Carry-over between slots: 1-based slot index, buffered bits, stored energy."""

    slot: int = 1
    residual_bits: float = 0.0
    residual_energy: float = 0.0
    power: list = field(default_factory=list)
    local_bits: list = field(default_factory=list)
    offl_bits: list = field(default_factory=list)


def _forecast_arrivals(state: OnlineState, arrival: float, mean_arrival: float, horizon: int):
    a = np.full(horizon, float(mean_arrival))
    a[0] = arrival + state.residual_bits
    return a


def online_static_step(state: OnlineState, arrival: float, h: float, g: float,
                       params: SystemParams, mean_arrival: float,
                       mode: Mode = Mode.JOINT) -> tuple[float, float, float]:
    """First-slot action of the static-channel re-plan; ``p`` covers exactly
    this slot's consumption."""
    horizon = params.num_slots - state.slot + 1
    if horizon < 1:
        raise DomainError("slot index past the horizon")
    a = _forecast_arrivals(state, arrival, mean_arrival, horizon)
    first = forward_search_averages(a)[0]
    per_slot = float(np.sum(a[:first])) / first
    level = solve_level(per_slot, h, g, params, mode)
    loc, off = bits_of_level(level, h, g, params, mode)
    demand = slot_energy(loc, off, g, params)
    p = demand / (params.slot_len * params.eh_efficiency * h)
    return float(p), float(loc), float(off)


def online_fading_step(state: OnlineState, arrival: float, h: float, g: float,
                       params: SystemParams, mean_wpt: float, mean_offl: float,
                       mean_arrival: float, mode: Mode = Mode.JOINT) -> tuple[float, float, float]:
    """First-slot action of the time-varying re-plan with threshold-based power."""
    horizon = params.num_slots - state.slot + 1
    if horizon < 1:
        raise DomainError("slot index past the horizon")
    a = _forecast_arrivals(state, arrival, mean_arrival, horizon)
    h_eff = np.full(horizon, max(h, mean_wpt))
    h_eff[0] = h
    gg = np.full(horizon, float(mean_offl))
    gg[0] = g
    local, offl, _, _ = forward_search(a, h_eff, gg, params, mode)
    loc, off = local[0], offl[0]
    demand = float(slot_energy(loc, off, g, params))
    stored = state.residual_energy
    if horizon == 1 or h <= mean_wpt:
        need = demand - stored
    else:
        need = params.online_gamma * demand - stored
    p = max(need, 0.0) / (params.slot_len * params.eh_efficiency * h)
    return float(p), float(loc), float(off)


def run_online(policy: str, tasks: TaskTrace, channels: ChannelTrace, params: SystemParams,
               mode: Mode = Mode.JOINT) -> AllocationPlan:
    """Drive a policy over the traces, revealing one slot at a time."""
    n = len(tasks)
    if len(channels) != n or params.num_slots != n:
        raise DomainError("trace lengths must equal num_slots")
    if policy not in ("static", "fading"):
        raise ValueError(f"unknown online policy {policy!r}")
    state = OnlineState()
    bits_tol = RESIDUAL_TOL * (1.0 + tasks.total)
    energy_scale = 0.0
    for i in range(n):
        a_i = float(tasks.arrivals[i])
        h_i = float(channels.wpt_gain[i])
        g_i = float(channels.offl_gain[i])
        if policy == "static":
            p, loc, off = online_static_step(state, a_i, h_i, g_i, params,
                                             tasks.mean_arrival, mode)
        else:
            p, loc, off = online_fading_step(state, a_i, h_i, g_i, params, channels.mean_wpt,
                                             channels.mean_offl, tasks.mean_arrival, mode)
        demand = float(slot_energy(loc, off, g_i, params))
        energy_scale += demand
        residual = state.residual_bits + a_i - loc - off
        stored = state.residual_energy + params.slot_len * params.eh_efficiency * h_i * p - demand
        if residual < -bits_tol:
            raise InfeasiblePlanError(f"slot {i + 1}: executed more bits than buffered")
        if stored < -RESIDUAL_TOL * max(energy_scale, 1e-300):
            raise InfeasiblePlanError(f"slot {i + 1}: consumed more energy than stored")
        state.power.append(p)
        state.local_bits.append(loc)
        state.offl_bits.append(off)
        state.residual_bits = max(residual, 0.0)
        state.residual_energy = max(stored, 0.0)
        state.slot += 1
    if state.residual_bits > bits_tol:
        raise InfeasiblePlanError("tasks left unexecuted at the deadline")
    return AllocationPlan(state.power, state.local_bits, state.offl_bits)
