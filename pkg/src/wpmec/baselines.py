"""Benchmark schemes: single-branch execution and the per-slot myopic design."""

from __future__ import annotations

import numpy as np

from .model import (
    AllocationPlan,
    ChannelTrace,
    Mode,
    SystemParams,
    TaskTrace,
    bits_of_level,
    slot_energy,
    solve_levels,
)
from .offline_fading import solve_fading
from .offline_static import solve_static
from .online import run_online


def _kind(channels: ChannelTrace, kind: str | None) -> str:
    if kind is None:
        return "static" if channels.is_static else "fading"
    if kind not in ("static", "fading"):
        raise ValueError(f"unknown channel kind {kind!r}")
    return kind


def solve_offline(tasks: TaskTrace, channels: ChannelTrace, params: SystemParams,
                  mode: Mode = Mode.JOINT, kind: str | None = None):
    """Dispatch to the static or time-varying offline solver."""
    if _kind(channels, kind) == "static":
        return solve_static(tasks, float(channels.wpt_gain[0]), float(channels.offl_gain[0]),
                            params, mode)
    return solve_fading(tasks, channels, params, mode)


def _restricted(mode, tasks, channels, params, offline, kind):
    if offline:
        return solve_offline(tasks, channels, params, mode, kind)[0]
    return run_online(_kind(channels, kind), tasks, channels, params, mode)


def local_only(tasks: TaskTrace, channels: ChannelTrace, params: SystemParams,
               offline: bool = True, kind: str | None = None) -> AllocationPlan:
    """Every bit computed on the device; still scheduled over time."""
    return _restricted(Mode.LOCAL_ONLY, tasks, channels, params, offline, kind)


def full_offload(tasks: TaskTrace, channels: ChannelTrace, params: SystemParams,
                 offline: bool = True, kind: str | None = None) -> AllocationPlan:
    """Every bit offloaded to the AP; still scheduled over time."""
    return _restricted(Mode.OFFLOAD_ONLY, tasks, channels, params, offline, kind)


def myopic(tasks: TaskTrace, channels: ChannelTrace, params: SystemParams) -> AllocationPlan:
    """Finish each slot's arrivals within that slot, split at minimum energy,
    with the ET covering exactly that slot's consumption."""
    h, g = channels.wpt_gain, channels.offl_gain
    # one independent single-slot level per slot
    levels = solve_levels(tasks.arrivals, np.eye(len(tasks)), h, g, params)
    local, offl = bits_of_level(levels, h, g, params)
    demand = slot_energy(local, offl, channels.offl_gain, params)
    power = demand / (params.slot_len * params.eh_efficiency * channels.wpt_gain)
    return AllocationPlan(power, local, offl, levels)
