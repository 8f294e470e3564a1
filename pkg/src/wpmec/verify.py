"""Independent checks on allocation plans.

``check_feasible`` tests the constraint set directly, ``check_structure`` tests
the shape an optimal offline plan must have, and ``grid_oracle`` brute-forces
tiny instances without touching the level machinery.
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
    level_of_local_bits,
    level_of_offl_bits,
    local_energy,
    offload_energy,
    offload_threshold,
)
from .offline_static import TransitionSchedule, uniform_power
from .offline_fading import compute_cds, cds_power

FEASIBILITY_TOL = 1e-9
STRUCTURE_TOL = 1e-8


@dataclass
class FeasibilityReport:
    ok: bool
    energy_slack: np.ndarray
    task_slack: np.ndarray
    completion_gap: float
    violations: list[str] = field(default_factory=list)

    def first_violation(self) -> str | None:
        return self.violations[0] if self.violations else None


def check_feasible(plan: AllocationPlan, tasks: TaskTrace, channels: ChannelTrace,
                   params: SystemParams, tol: float = FEASIBILITY_TOL) -> FeasibilityReport:
    """Cumulative energy causality, cumulative task causality, completion at N.

    Slacks are per slot (index 0 is slot 1). Tolerances are relative to the
    totals involved, with a unit floor on the bit side.
    """
    n = len(plan)
    if len(tasks) != n or len(channels) != n:
        raise DomainError("plan, tasks and channels must share one length")
    violations = []
    for name, arr in (("power", plan.power), ("local bits", plan.local_bits),
                      ("offloaded bits", plan.offl_bits)):
        bad = np.flatnonzero(arr < 0)
        if bad.size:
            violations.append(f"negative {name} at slot {bad[0] + 1}")
    if violations:
        empty = np.zeros(n)
        return FeasibilityReport(False, empty, empty, float("nan"), violations)

    consumed = np.cumsum(plan.consumption(channels, params))
    harvested = np.cumsum(plan.harvested(channels, params))
    energy_slack = harvested - consumed
    e_tol = tol * max(consumed[-1], harvested[-1]) + 1e-300

    arrived = np.cumsum(tasks.arrivals)
    executed = np.cumsum(plan.executed_bits)
    task_slack = arrived - executed
    b_tol = tol * (1.0 + arrived[-1])

    for i in np.flatnonzero(energy_slack < -e_tol):
        violations.append(f"energy causality violated at slot {i + 1}")
    for i in np.flatnonzero(task_slack < -b_tol):
        violations.append(f"task causality violated at slot {i + 1}")
    gap = float(task_slack[-1])
    if abs(gap) > b_tol:
        violations.append(f"task completion missed by {gap:.6g} bits at slot {n}")
    return FeasibilityReport(not violations, energy_slack, task_slack, gap, violations)


@dataclass
class StructureReport:
    ok: bool
    checks: dict[str, bool]
    failures: list[str]


def check_structure(plan: AllocationPlan, schedule: TransitionSchedule, tasks: TaskTrace,
                    channels: ChannelTrace, params: SystemParams, kind: str,
                    mode: Mode = Mode.JOINT, rtol: float = STRUCTURE_TOL) -> StructureReport:
    """Structural properties every optimal offline plan satisfies."""
    mode = Mode(mode)
    if kind not in ("static", "fading"):
        raise ValueError(f"unknown channel kind {kind!r}")
    checks: dict[str, bool] = {}
    failures: list[str] = []

    def record(name, ok, detail=""):
        checks[name] = bool(ok)
        if not ok:
            failures.append(f"{name}: {detail}" if detail else name)

    loc, off, p = plan.local_bits, plan.offl_bits, plan.power
    n = len(plan)
    h, g = channels.wpt_gain, channels.offl_gain
    cds = compute_cds(h)
    h_eff = cds.effective_gains
    bit_scale = 1.0 + float(np.max(tasks.arrivals)) if n else 1.0

    def first_drop(x):
        drops = np.flatnonzero(np.diff(x) < -rtol * bit_scale)
        return None if drops.size == 0 else int(drops[0]) + 2

    slot = first_drop(loc)
    record("staircase_local", slot is None, f"local bits drop at slot {slot}")
    if kind == "static":
        slot = first_drop(off)
        record("staircase_offload", slot is None, f"offloaded bits drop at slot {slot}")

    levels = np.asarray(schedule.levels)
    bad = np.flatnonzero(np.diff(levels) < -rtol * np.maximum(levels[:-1], 1e-300))
    record("levels_nondecreasing", bad.size == 0,
           f"level falls after transition slot {schedule.transition_slots[bad[0]]}"
           if bad.size else "")

    if schedule.transition_slots[-1] != n:
        record("buffer_clearing", False, "last transition slot is not N")
    else:
        arrived = np.cumsum(tasks.arrivals)
        executed = np.cumsum(plan.executed_bits)
        bad = [t for t in schedule.transition_slots
               if abs(executed[t - 1] - arrived[t - 1]) > rtol * (1.0 + arrived[t - 1])]
        record("buffer_clearing", not bad, f"buffer not empty after slot {bad[0]}" if bad else "")

    # per-slot level implied by the schedule must reproduce the emitted bits
    slot_lv = schedule.slot_levels()
    want_loc, want_off = bits_of_level(slot_lv, h_eff, g, params, mode)
    mismatch = np.flatnonzero(
        (np.abs(want_loc - loc) > rtol * bit_scale) | (np.abs(want_off - off) > rtol * bit_scale))
    record("kkt_closed_form", mismatch.size == 0,
           f"bits disagree with interval level at slot {mismatch[0] + 1}" if mismatch.size else "")

    thr = offload_threshold(h_eff, g, params)
    if mode.uses_offload:
        above = slot_lv > thr * (1.0 + rtol)
        below = slot_lv <= thr
        wrong = np.flatnonzero((above & (off <= 0)) | (below & (off > rtol * bit_scale)))
        record("waterfilling_threshold", wrong.size == 0,
               f"offloading disagrees with threshold at slot {wrong[0] + 1}" if wrong.size else "")
    # levels recovered by inverting each branch agree within each interval
    with np.errstate(divide="ignore", invalid="ignore"):
        from_loc = level_of_local_bits(loc, h_eff, params)
        from_off = level_of_offl_bits(off, h_eff, g, params)
    disagree = []
    for (lo, hi), lvl in zip(schedule.intervals, schedule.levels):
        cands = []
        if mode.uses_local:
            cands.append(from_loc[lo:hi][loc[lo:hi] > 0])
        if mode.uses_offload:
            cands.append(from_off[lo:hi][off[lo:hi] > 0])
        vals = np.concatenate(cands) if cands else np.empty(0)
        if vals.size and np.any(np.abs(vals - lvl) > 1e-6 * lvl):
            disagree.append(hi)
    record("kkt_level_recovery", not disagree,
           f"recovered levels disagree in interval ending at slot {disagree[0]}" if disagree else "")

    consumed = plan.consumption(channels, params)
    harvested = plan.harvested(channels, params)
    total = float(np.sum(consumed))
    e_tol = rtol * max(total, 1e-300)
    record("energy_tightness", abs(float(np.sum(harvested)) - total) <= e_tol,
           "total harvested differs from total consumed")

    if kind == "static":
        record("uniform_power", np.all(np.abs(p - p[0]) <= rtol * max(p[0], 1e-300)),
               "static power is not uniform")
    else:
        non_cds = np.setdiff1d(np.arange(n), np.array(cds.cds_slots) - 1)
        stray = non_cds[p[non_cds] != 0]
        record("cds_only_power", stray.size == 0,
               f"power at non-CDS slot {stray[0] + 1}" if stray.size else "")
        unbalanced = [lo + 1 for lo, hi in cds.segments()
                      if abs(harvested[lo] - np.sum(consumed[lo:hi])) > e_tol]
        record("cds_energy_balance", not unbalanced,
               f"CDS {unbalanced[0]} does not balance its segment" if unbalanced else "")
    return StructureReport(not failures, checks, failures)


# ---------------------------------------------------------------------------
# brute-force oracle

MAX_ORACLE_SLOTS = 3


@dataclass
class OracleResult:
    objective: float
    local_bits: np.ndarray
    offl_bits: np.ndarray
    power: np.ndarray


def _refine(cost, lo, hi, points, passes, shrink):
    """Grid-minimise ``cost`` over a box, re-centering a shrunken box each pass.

    ``cost`` maps an array of shape (k, dim) of box coordinates to (k,) costs.
    """
    best_x, best_c = None, np.inf
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(passes):
        axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
        grid = np.stack([m.reshape(-1) for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        c = cost(grid)
        k = int(np.argmin(c))
        if c[k] < best_c:
            best_c, best_x = float(c[k]), grid[k]
        half = (hi - lo) / (2.0 * shrink)
        lo = np.clip(best_x - half, 0.0, 1.0)
        hi = np.clip(best_x + half, 0.0, 1.0)
    return best_x, best_c


def _split_min(b, g, params, points, passes, shrink):
    """min over l in [0, b] of E_loc(l) + E_off(b - l), vectorised over ``b``."""
    b = np.asarray(b, dtype=float)
    g = np.broadcast_to(np.asarray(g, dtype=float), b.shape)[:, None]
    lo = np.zeros(b.size)
    hi = np.ones(b.size)
    best = np.full(b.size, np.inf)
    best_f = np.zeros(b.size)
    for _ in range(passes):
        frac = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, points)[None, :]
        loc = frac * b[:, None]
        cost = local_energy(loc, params) + offload_energy(b[:, None] - loc, g, params)
        k = np.argmin(cost, axis=1)
        c = cost[np.arange(b.size), k]
        f = frac[np.arange(b.size), k]
        better = c < best
        best = np.where(better, c, best)
        best_f = np.where(better, f, best_f)
        half = (hi - lo) / (2.0 * shrink)
        lo = np.clip(best_f - half, 0.0, 1.0)
        hi = np.clip(best_f + half, 0.0, 1.0)
    return best, best_f


def grid_oracle(tasks: TaskTrace, channels: ChannelTrace, params: SystemParams,
                mode: Mode = Mode.JOINT, kind: str | None = None, points: int = 200,
                refinements: int = 2, shrink: float = 10.0, table_size: int = 401) -> OracleResult:
    """Exhaustive grid minimum of the ET energy for at most three slots.

    ET power is eliminated (optimal power for fixed bits is closed-form), so
    the search runs over cumulative executed bits, parametrised so that every
    grid point respects task causality, and over each slot's local/offload
    split. The result is an upper bound on the true optimum.
    """
    mode = Mode(mode)
    n = len(tasks)
    if n > MAX_ORACLE_SLOTS:
        raise DomainError(f"grid oracle refuses {n} slots (max {MAX_ORACLE_SLOTS})")
    if kind is None:
        kind = "static" if channels.is_static else "fading"
    h, g = channels.wpt_gain, channels.offl_gain
    weight = 1.0 / (params.eh_efficiency * np.maximum.accumulate(h))
    cum_arr = np.cumsum(tasks.arrivals)
    passes = refinements + 1
    if cum_arr[-1] == 0:
        z = np.zeros(n)
        return OracleResult(0.0, z, z.copy(), z.copy())

    if mode is Mode.JOINT:
        tables = []
        for i in range(n):
            b_axis = np.linspace(0.0, cum_arr[i], table_size)
            vals, _ = _split_min(b_axis, g[i], params, points, passes, shrink)
            tables.append((b_axis, vals * weight[i]))

        def slot_cost(i, b):
            return np.interp(b, *tables[i])
    elif mode is Mode.LOCAL_ONLY:
        def slot_cost(i, b):
            return local_energy(b, params) * weight[i]
    else:
        def slot_cost(i, b):
            return offload_energy(b, g[i], params) * weight[i]

    def to_bits(u):
        # u in [0,1]^(n-1): cumulative executed X_k = X_{k-1} + u_k (S_k - X_{k-1})
        x_prev = np.zeros(u.shape[0])
        bits = []
        for k in range(n - 1):
            x = x_prev + u[:, k] * (cum_arr[k] - x_prev)
            bits.append(x - x_prev)
            x_prev = x
        bits.append(cum_arr[-1] - x_prev)
        return np.maximum(np.stack(bits, axis=1), 0.0)

    def cost(u):
        b = to_bits(u)
        return sum(slot_cost(i, b[:, i]) for i in range(n))

    if n == 1:
        bits = np.array([cum_arr[0]])
    else:
        u_best, _ = _refine(cost, [0.0] * (n - 1), [1.0] * (n - 1), points, passes, shrink)
        bits = to_bits(u_best[None, :])[0]

    if mode is Mode.JOINT:
        _, frac = _split_min(bits, np.asarray(g), params, points, passes, shrink)
        loc = frac * bits
    elif mode is Mode.LOCAL_ONLY:
        loc = bits.copy()
    else:
        loc = np.zeros(n)
    off = np.maximum(bits - loc, 0.0)
    if kind == "static":
        power = uniform_power(loc, off, float(h[0]), float(g[0]), params)
    else:
        power = cds_power(loc, off, channels, params)
    return OracleResult(params.slot_len * float(np.sum(power)), loc, off, power)
