"""Core types and closed-form energy/level relations for a wireless-powered
MEC user.

All bit quantities are continuous reals. Energies are joules, powers watts.
A *computation level* is the marginal weighted energy per executed bit; both
the local-computing bits and the offloaded bits of a slot are closed-form,
non-decreasing functions of it, so a target number of bits over any set of
slots pins down a unique level.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

LN2 = math.log(2.0)


class DomainError(ValueError):
    """Raised when an input lies outside the model's domain."""


class ConvergenceError(RuntimeError):
    """Raised when the level root-find fails numerically."""


class Mode(str, enum.Enum):
    """Which execution branches a solver may use."""

    JOINT = "joint"
    LOCAL_ONLY = "local_only"
    OFFLOAD_ONLY = "offload_only"

    @property
    def uses_local(self) -> bool:
        return self is not Mode.OFFLOAD_ONLY

    @property
    def uses_offload(self) -> bool:
        return self is not Mode.LOCAL_ONLY


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the link and the user's CPU."""

    slot_len: float = 0.1
    bandwidth: float = 1e6
    noise_power: float = 1e-9
    eh_efficiency: float = 0.3
    cap_coeff: float = 1e-29
    cycles_per_bit: float = 200.0
    num_slots: int = 50
    online_gamma: float = 2.0
    snr_gap: float = 1.0

    def __post_init__(self):
        checks = [
            (self.slot_len > 0, "slot_len must be > 0"),
            (self.bandwidth > 0, "bandwidth must be > 0"),
            (self.noise_power > 0, "noise_power must be > 0"),
            (0 < self.eh_efficiency <= 1, "eh_efficiency must be in (0, 1]"),
            (self.cap_coeff > 0, "cap_coeff must be > 0"),
            (self.cycles_per_bit > 0, "cycles_per_bit must be > 0"),
            (int(self.num_slots) == self.num_slots and self.num_slots >= 1,
             "num_slots must be a positive integer"),
            (self.online_gamma > 1, "online_gamma must be > 1"),
            (self.snr_gap >= 1, "snr_gap must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DomainError(msg)
        object.__setattr__(self, "num_slots", int(self.num_slots))

    @property
    def cpu_coeff(self) -> float:
        """zeta * C**3, the cubic coefficient of local energy (times tau**2)."""
        return self.cap_coeff * self.cycles_per_bit ** 3

    def with_slots(self, num_slots: int) -> "SystemParams":
        return dataclasses.replace(self, num_slots=num_slots)


def _as_vector(values, name: str, n: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if n is not None and arr.size != n:
        raise DomainError(f"{name} has length {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class TaskTrace:
    """Per-slot arrived task input-bits."""

    arrivals: np.ndarray
    mean_arrival: float = 0.0

    def __post_init__(self):
        arr = _as_vector(self.arrivals, "arrivals")
        if arr.size == 0:
            raise DomainError("arrivals must be non-empty")
        if np.any(arr < 0):
            raise DomainError("arrivals must be non-negative")
        if not self.mean_arrival >= 0:
            raise DomainError("mean_arrival must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "arrivals", arr)
        object.__setattr__(self, "mean_arrival", float(self.mean_arrival))

    def __len__(self) -> int:
        return self.arrivals.size

    @property
    def total(self) -> float:
        return float(math.fsum(self.arrivals))


@dataclass(frozen=True)
class ChannelTrace:
    """Per-slot WPT and offloading power gains, plus their long-run means."""

    wpt_gain: np.ndarray
    offl_gain: np.ndarray
    mean_wpt: float = float("nan")
    mean_offl: float = float("nan")

    def __post_init__(self):
        h = _as_vector(self.wpt_gain, "wpt_gain")
        g = _as_vector(self.offl_gain, "offl_gain", h.size)
        if h.size == 0:
            raise DomainError("channel trace must be non-empty")
        if np.any(h <= 0) or np.any(g <= 0):
            raise DomainError("channel gains must be > 0")
        for arr in (h, g):
            arr.setflags(write=False)
        object.__setattr__(self, "wpt_gain", h)
        object.__setattr__(self, "offl_gain", g)
        mean_h = float(np.mean(h)) if math.isnan(self.mean_wpt) else float(self.mean_wpt)
        mean_g = float(np.mean(g)) if math.isnan(self.mean_offl) else float(self.mean_offl)
        if mean_h <= 0 or mean_g <= 0:
            raise DomainError("mean gains must be > 0")
        object.__setattr__(self, "mean_wpt", mean_h)
        object.__setattr__(self, "mean_offl", mean_g)

    def __len__(self) -> int:
        return self.wpt_gain.size

    @property
    def is_static(self) -> bool:
        h, g = self.wpt_gain, self.offl_gain
        return bool(np.all(h == h[0]) and np.all(g == g[0]))

    @classmethod
    def static(cls, h: float, g: float, num_slots: int, mean_wpt=None, mean_offl=None):
        return cls(
            np.full(num_slots, float(h)),
            np.full(num_slots, float(g)),
            h if mean_wpt is None else mean_wpt,
            g if mean_offl is None else mean_offl,
        )


@dataclass
class AllocationPlan:
    """Per-slot ET power and the user's local/offloaded bits."""

    power: np.ndarray
    local_bits: np.ndarray
    offl_bits: np.ndarray
    levels: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.power = np.asarray(self.power, dtype=float)
        self.local_bits = np.asarray(self.local_bits, dtype=float)
        self.offl_bits = np.asarray(self.offl_bits, dtype=float)
        n = self.power.size
        if self.local_bits.size != n or self.offl_bits.size != n:
            raise DomainError("plan sequences must share one length")
        if self.levels is not None:
            self.levels = np.asarray(self.levels, dtype=float)

    def __len__(self) -> int:
        return self.power.size

    @property
    def executed_bits(self) -> np.ndarray:
        return self.local_bits + self.offl_bits

    def objective(self, params: SystemParams) -> float:
        """Total ET transmit energy, sum of tau * p_i."""
        return params.slot_len * math.fsum(self.power)

    def energy_per_slot(self, params: SystemParams) -> float:
        return self.objective(params) / len(self)

    def consumption(self, channels: ChannelTrace, params: SystemParams) -> np.ndarray:
        return slot_energy(self.local_bits, self.offl_bits, channels.offl_gain, params)

    def harvested(self, channels: ChannelTrace, params: SystemParams) -> np.ndarray:
        return harvested_energy(self.power, channels.wpt_gain, params)

    @classmethod
    def zeros(cls, n: int) -> "AllocationPlan":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))


# ---------------------------------------------------------------------------
# energy functions


def local_energy(bits, params: SystemParams):
    """Energy of computing ``bits`` locally in one slot at constant CPU speed."""
    bits = np.asarray(bits, dtype=float)
    if np.any(bits < 0):
        raise DomainError("local bits must be non-negative")
    out = params.cpu_coeff * bits ** 3 / params.slot_len ** 2
    return float(out) if out.ndim == 0 else out


def offload_energy(bits, g, params: SystemParams):
    """Transmit energy to offload ``bits`` within one slot over gain ``g``."""
    bits = np.asarray(bits, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(g <= 0):
        raise DomainError("offloading gain must be > 0")
    if np.any(bits < 0):
        raise DomainError("offloaded bits must be non-negative")
    tau, bw = params.slot_len, params.bandwidth
    out = tau * params.snr_gap * params.noise_power / g * np.expm1(bits * LN2 / (tau * bw))
    return float(out) if out.ndim == 0 else out


def harvested_energy(power, h, params: SystemParams):
    """Energy the user harvests from ET power ``power`` over WPT gain ``h``."""
    power = np.asarray(power, dtype=float)
    h = np.asarray(h, dtype=float)
    if np.any(power < 0):
        raise DomainError("power must be non-negative")
    if np.any(h <= 0):
        raise DomainError("WPT gain must be > 0")
    out = params.slot_len * params.eh_efficiency * h * power
    return float(out) if out.ndim == 0 else out


def slot_energy(local_bits, offl_bits, g, params: SystemParams):
    """Total user consumption per slot."""
    return local_energy(local_bits, params) + offload_energy(offl_bits, g, params)


# ---------------------------------------------------------------------------
# closed-form bits as functions of the computation level


def offload_threshold(h_eff, g, params: SystemParams):
    """Level below which offloading is idle: Gamma*sigma^2*ln2 / (B*eta*h*g)."""
    h_eff = np.asarray(h_eff, dtype=float)
    g = np.asarray(g, dtype=float)
    out = (params.snr_gap * params.noise_power * LN2
           / (params.bandwidth * params.eh_efficiency * h_eff * g))
    return float(out) if out.ndim == 0 else out


def local_bits_of_level(level, h_eff, params: SystemParams):
    level = np.maximum(np.asarray(level, dtype=float), 0.0)
    h_eff = np.asarray(h_eff, dtype=float)
    out = params.slot_len * np.sqrt(params.eh_efficiency * h_eff * level
                                    / (3.0 * params.cpu_coeff))
    return float(out) if out.ndim == 0 else out


def offl_bits_of_level(level, h_eff, g, params: SystemParams):
    level = np.asarray(level, dtype=float)
    thr = offload_threshold(h_eff, g, params)
    # log1p keeps precision just above the threshold
    out = params.slot_len * params.bandwidth * np.log1p(np.maximum(level - thr, 0.0) / thr) / LN2
    return float(out) if np.ndim(out) == 0 else out


def bits_of_level(level, h_eff, g, params: SystemParams, mode: Mode = Mode.JOINT):
    """(local, offloaded) bits at ``level``, with the disabled branch zeroed."""
    mode = Mode(mode)
    if mode.uses_local:
        loc = local_bits_of_level(level, h_eff, params)
    else:
        loc = np.zeros(np.broadcast(level, h_eff).shape)
    if mode.uses_offload:
        off = offl_bits_of_level(level, h_eff, g, params)
    else:
        off = np.zeros(np.broadcast(level, h_eff, g).shape)
    return loc, off


def level_of_local_bits(bits, h_eff, params: SystemParams):
    """Inverse of :func:`local_bits_of_level` on its increasing branch."""
    bits = np.asarray(bits, dtype=float)
    return (3.0 * params.cpu_coeff * bits ** 2
            / (params.eh_efficiency * np.asarray(h_eff, dtype=float) * params.slot_len ** 2))


def level_of_offl_bits(bits, h_eff, g, params: SystemParams):
    """Inverse of :func:`offl_bits_of_level` for positive offloaded bits."""
    bits = np.asarray(bits, dtype=float)
    thr = offload_threshold(h_eff, g, params)
    return thr * np.exp2(bits / (params.slot_len * params.bandwidth))


# ---------------------------------------------------------------------------
# level root-finding

REL_TOL = 1e-12
MAX_ITER = 300
_BISECT_SEED = 1e-12
NEGLIGIBLE_BITS = 1e-100


def _row_bits(v, shift, counts, k_loc, log_thr, tb, mode: Mode):
    """Total bits and d(bits)/d(log level) for each row at log-level ``v + shift``.

    counts: (m, U) slot multiplicities; k_loc, log_thr: (U,) per slot type.
    Working relative to a per-row ``shift`` keeps ``v - (log_thr - shift)``
    accurate when the level sits just above a threshold.
    """
    total = np.zeros(v.shape)
    deriv = np.zeros(v.shape)
    if mode.uses_local:
        loc = k_loc[None, :] * np.exp(0.5 * (v + shift))[:, None]
        total += np.einsum("ij,ij->i", counts, loc)
        deriv += 0.5 * total
    if mode.uses_offload:
        excess = np.maximum(v[:, None] - (log_thr[None, :] - shift[:, None]), 0.0)
        active = (excess > 0).astype(float)
        total += (tb / LN2) * np.einsum("ij,ij->i", counts, excess)
        deriv += (tb / LN2) * np.einsum("ij,ij->i", counts, active)
    return total, deriv


def solve_levels(targets, counts, h_eff, g, params: SystemParams,
                 mode: Mode = Mode.JOINT, method: str = "newton") -> np.ndarray:
    """Levels making each row's total bits hit its target.

    Row ``r`` covers ``counts[r, u]`` slots of type ``u`` (gains ``h_eff[u]``,
    ``g[u]``) and must execute ``targets[r]`` bits in total. The bits-vs-level
    map is continuous, non-decreasing, zero at level 0 and unbounded, so the
    root exists; it is unique wherever the map is strictly increasing.

    ``method="newton"`` iterates in log-level, where the total-bits map is
    convex and increasing; starting from an upper bound, the iterates decrease
    monotonically onto the root. ``method="bisect"`` doubles an upper bracket
    from 1e-12 and bisects to relative width 1e-12.
    """
    mode = Mode(mode)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    counts = np.atleast_2d(np.asarray(counts, dtype=float))
    h_eff = np.atleast_1d(np.asarray(h_eff, dtype=float))
    g = np.atleast_1d(np.asarray(g, dtype=float))
    if np.any(targets < 0):
        raise DomainError("target bits must be non-negative")
    if counts.shape != (targets.size, h_eff.size) or g.shape != h_eff.shape:
        raise DomainError("inconsistent shapes in level solve")
    if np.any(h_eff <= 0) or np.any(g <= 0):
        raise DomainError("gains must be > 0")

    levels = np.zeros(targets.size)
    # far below any tolerance; the matching level would underflow
    live = targets > NEGLIGIBLE_BITS
    if not np.any(live):
        return levels
    if method == "bisect":
        levels[live] = _bisect_levels(targets[live], counts[live], h_eff, g, params, mode)
        return levels
    if method != "newton":
        raise ValueError(f"unknown method {method!r}")

    t = targets[live]
    c = counts[live]
    tau, tb = params.slot_len, params.slot_len * params.bandwidth
    k_loc = tau * np.sqrt(params.eh_efficiency * h_eff / (3.0 * params.cpu_coeff))
    thr = np.atleast_1d(offload_threshold(h_eff, g, params))
    log_thr = np.log(thr)

    # upper bounds on the root (log domain)
    shift = np.zeros(t.size)
    if mode.uses_offload:
        present = c > 0
        shift = np.where(present, log_thr[None, :], np.inf).min(axis=1)
        spread = np.where(present, log_thr[None, :], -np.inf).max(axis=1) - shift
    u = np.full(t.size, np.inf)
    if mode.uses_local:
        u = np.minimum(u, 2.0 * np.log(t / (c @ k_loc)) - shift)
    if mode.uses_offload:
        u = np.minimum(u, spread + LN2 * t / (tb * c.sum(axis=1)))
        # the lowest-threshold slots alone already reach the target here
        lowest = np.where(present & (log_thr[None, :] == shift[:, None]), c, 0.0).sum(axis=1)
        linear = LN2 * t / (tb * lowest)
        u = np.minimum(u, linear)

    done = np.zeros(t.size, dtype=bool)
    for _ in range(MAX_ITER):
        idx = ~done
        total, deriv = _row_bits(u[idx], shift[idx], c[idx], k_loc, log_thr, tb, mode)
        resid = total - t[idx]
        ok = np.abs(resid) <= REL_TOL * t[idx]
        step = np.where(deriv > 0, resid / np.where(deriv > 0, deriv, 1.0), 0.0)
        stalled = np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(u[idx]))
        u_new = u[idx] - np.where(ok, 0.0, step)
        if mode.uses_offload and not mode.uses_local:
            # rounding can land below every threshold, where the map is flat
            flat = (deriv == 0) & ~ok
            u_new = np.where(flat, linear[idx], u_new)
            stalled &= ~flat
        u[idx] = u_new
        finished = ok | stalled
        done[np.flatnonzero(idx)[finished]] = True
        if done.all():
            break
    else:
        # fall back on plain bisection for whatever Newton left unfinished
        rest = ~done
        u[rest] = np.log(_bisect_levels(t[rest], c[rest], h_eff, g, params, mode)) - shift[rest]

    total, _ = _row_bits(u, shift, c, k_loc, log_thr, tb, mode)
    if not np.all(np.abs(total - t) <= 1e-8 * t):
        raise ConvergenceError("level solve did not reproduce its targets")
    if mode.uses_offload:
        # scale the linear threshold so levels just above it stay exact
        levels[live] = np.where(present, thr[None, :], np.inf).min(axis=1) * np.exp(u)
    else:
        levels[live] = np.exp(u)
    return levels


def _bisect_levels(t, c, h_eff, g, params, mode):
    tau, tb = params.slot_len, params.slot_len * params.bandwidth
    k_loc = tau * np.sqrt(params.eh_efficiency * h_eff / (3.0 * params.cpu_coeff))
    log_thr = np.log(offload_threshold(h_eff, g, params))

    def total(level):
        with np.errstate(divide="ignore"):
            return _row_bits(np.log(level), np.zeros(t.size), c, k_loc, log_thr, tb, mode)[0]

    hi = np.full(t.size, _BISECT_SEED)
    lo = np.zeros(t.size)
    for _ in range(MAX_ITER):
        under = total(hi) < t
        if not under.any():
            break
        lo = np.where(under, hi, lo)
        hi = np.where(under, 2.0 * hi, hi)
    else:
        raise ConvergenceError("could not bracket the level")
    for _ in range(MAX_ITER):
        if np.all(hi - lo <= REL_TOL * hi):
            break
        mid = 0.5 * (lo + hi)
        over = total(mid) >= t
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
    else:
        raise ConvergenceError("bisection hit the iteration cap")
    return hi


def solve_level(target_bits: float, h_eff, g, params: SystemParams,
                mode: Mode = Mode.JOINT, method: str = "newton") -> float:
    """Common level over the given slots whose total bits equal ``target_bits``."""
    h_eff = np.atleast_1d(np.asarray(h_eff, dtype=float))
    g = np.broadcast_to(np.asarray(g, dtype=float), h_eff.shape)
    if h_eff.size == 0:
        raise DomainError("need at least one slot")
    types, inverse = np.unique(np.stack([h_eff, g], axis=1), axis=0, return_inverse=True)
    counts = np.bincount(inverse.reshape(-1), minlength=len(types)).astype(float)
    return float(solve_levels([target_bits], counts[None, :], types[:, 0], types[:, 1],
                              params, mode, method)[0])
