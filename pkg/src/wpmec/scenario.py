"""Random instances and the Monte Carlo harness.

Randomness comes from Philox4x64-10 keyed by ``(seed, stream)``. Block ``j``
(j = 1, 2, ...) encrypts the counter ``(j, 0, 0, 0)`` and yields its four
64-bit words in order. Uniforms take the top 53 bits of each word; normals are
Box-Muller pairs ``sqrt(-2 ln(1 - u1)) * (cos, sin)(2 pi u2)`` over consecutive
uniforms. Both steps are simple enough to reimplement bit-exactly elsewhere.

Replication ``r`` of a run draws its channels from stream ``2r`` and its
arrivals from stream ``2r + 1``, so adding schemes never shifts the traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import full_offload, local_only, myopic, solve_offline
from .model import ChannelTrace, DomainError, SystemParams, TaskTrace
from .online import InfeasiblePlanError, run_online
from .verify import check_feasible

SCHEMES = ("offline", "online", "local_only", "full_offload", "myopic")
KINDS = ("static", "fading")

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class GeometryConfig:
    """Line geometry: the user sits ``user_distance`` metres from the ET, on the
    way to the AP. ``rician_factor=inf`` gives the pure line-of-sight channel."""

    user_distance: float = 3.0
    et_ap_distance: float = 10.0
    pathloss_ref_db: float = -37.0
    pathloss_exponent: float = 3.0
    rician_factor: float = 2.0
    num_antennas: int = 4

    def __post_init__(self):
        if not 0.0 < self.user_distance < self.et_ap_distance:
            raise DomainError("user distance must lie strictly between ET and AP")
        if self.num_antennas < 1 or int(self.num_antennas) != self.num_antennas:
            raise DomainError("num_antennas must be a positive integer")
        if not self.rician_factor >= 0:
            raise DomainError("rician_factor must be >= 0")
        if not self.pathloss_exponent > 0:
            raise DomainError("pathloss_exponent must be > 0")

    @property
    def pathloss_ref(self) -> float:
        return 10.0 ** (self.pathloss_ref_db / 10.0)

    @property
    def wpt_pathloss(self) -> float:
        return self.pathloss_ref * self.user_distance ** -self.pathloss_exponent

    @property
    def offl_pathloss(self) -> float:
        return self.pathloss_ref * (self.et_ap_distance - self.user_distance) ** -self.pathloss_exponent

    @property
    def mean_wpt(self) -> float:
        return self.num_antennas * self.wpt_pathloss

    @property
    def mean_offl(self) -> float:
        return self.offl_pathloss


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v <= _U64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer")


class PortableRng:
    """Counter-based stream with a fixed, documented output transform."""

    def __init__(self, spec: RngSpec):
        self.spec = spec
        key = np.array([spec.seed, spec.stream], dtype=np.uint64)
        self._gen = np.random.Philox(key=key)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        raw = np.asarray(self._gen.random_raw(n), dtype=np.uint64)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normals; an odd ``n`` still consumes a full pair."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        return z.reshape(-1)[:n]


def _rician(los_pl: float, k: float, size: tuple[int, ...], rng: PortableRng) -> np.ndarray:
    """Complex Rician samples with all-ones LoS part; last axis is antennas."""
    if math.isinf(k):
        return np.full(size, math.sqrt(los_pl), dtype=complex)
    los = math.sqrt(k * los_pl / (1.0 + k))
    nlos = math.sqrt(los_pl / (1.0 + k))
    z = rng.normal(2 * math.prod(size)).reshape(size + (2,)) * math.sqrt(0.5)
    return los + nlos * (z[..., 0] + 1j * z[..., 1])


def gen_channels(geom: GeometryConfig, num_slots: int, rng: PortableRng,
                 static: bool = False) -> ChannelTrace:
    """Per-slot WPT and offloading power gains.

    Draws the M-antenna WPT vectors for all slots first, then the scalar
    offloading coefficients. A static trace holds the first draw for every slot.
    """
    if num_slots < 1:
        raise DomainError("num_slots must be >= 1")
    draws = 1 if static else num_slots
    h_vec = _rician(geom.wpt_pathloss, geom.rician_factor, (draws, geom.num_antennas), rng)
    g_vec = _rician(geom.offl_pathloss, geom.rician_factor, (draws,), rng)
    h = np.sum(h_vec.real ** 2 + h_vec.imag ** 2, axis=1)
    g = g_vec.real ** 2 + g_vec.imag ** 2
    if static:
        h = np.repeat(h, num_slots)
        g = np.repeat(g, num_slots)
    return ChannelTrace(h, g, geom.mean_wpt, geom.mean_offl)


def gen_tasks(a_max: float, num_slots: int, rng: PortableRng) -> TaskTrace:
    if not a_max >= 0:
        raise DomainError("A_max must be >= 0")
    return TaskTrace(rng.uniform(num_slots) * a_max, a_max / 2.0)


@dataclass(frozen=True)
class ScenarioConfig:
    params: SystemParams = field(default_factory=SystemParams)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    kind: str = "fading"
    a_max: float = 5e5
    seed: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}")
        if not self.a_max >= 0:
            raise DomainError("A_max must be >= 0")
        RngSpec(self.seed)


def realization(config: ScenarioConfig, rep: int) -> tuple[TaskTrace, ChannelTrace]:
    n = config.params.num_slots
    chan_rng = PortableRng(RngSpec(config.seed, 2 * rep))
    task_rng = PortableRng(RngSpec(config.seed, 2 * rep + 1))
    channels = gen_channels(config.geometry, n, chan_rng, static=config.kind == "static")
    return gen_tasks(config.a_max, n, task_rng), channels


def run_scheme(name: str, tasks: TaskTrace, channels: ChannelTrace, params: SystemParams,
               kind: str):
    """Returns ``(plan, schedule)``; ``schedule`` is None except for the offline scheme."""
    if name == "offline":
        return solve_offline(tasks, channels, params, kind=kind)
    if name == "online":
        return run_online(kind, tasks, channels, params), None
    if name == "local_only":
        return local_only(tasks, channels, params, kind=kind), None
    if name == "full_offload":
        return full_offload(tasks, channels, params, kind=kind), None
    if name == "myopic":
        return myopic(tasks, channels, params), None
    raise DomainError(f"unknown scheme {name!r}; choose from {SCHEMES}")


@dataclass
class SchemeSummary:
    mean: float
    stderr: float
    reps: int


@dataclass
class ScenarioResult:
    """``values[scheme][r]`` is the energy per slot of replication ``r``."""

    config: ScenarioConfig
    schemes: tuple[str, ...]
    values: dict[str, np.ndarray]
    summary: dict[str, SchemeSummary]

    def rows(self) -> list[dict]:
        return [{"rep": r, "scheme": s, "energy_per_slot": float(self.values[s][r])}
                for r in range(len(self.values[self.schemes[0]])) for s in self.schemes]


def _summarise(x: np.ndarray) -> SchemeSummary:
    n = x.size
    mean = math.fsum(x) / n
    if n < 2:
        return SchemeSummary(mean, float("nan"), n)
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return SchemeSummary(mean, math.sqrt(var / n), n)


def run_montecarlo(config: ScenarioConfig, schemes, replications: int,
                   on_plan=None) -> ScenarioResult:
    """Run every scheme on the same realizations and aggregate energy per slot.

    ``on_plan(rep, scheme, plan, schedule, tasks, channels)`` is called for each
    plan after its feasibility check, for callers that want extra diagnostics.
    """
    schemes = tuple(schemes)
    if not schemes:
        raise DomainError("no schemes requested")
    for s in schemes:
        if s not in SCHEMES:
            raise DomainError(f"unknown scheme {s!r}; choose from {SCHEMES}")
    if replications < 1:
        raise DomainError("replications must be >= 1")
    params = config.params
    values = {s: np.empty(replications) for s in schemes}
    for rep in range(replications):
        tasks, channels = realization(config, rep)
        for s in schemes:
            where = f"seed={config.seed}, stream={rep}, scheme={s}"
            try:
                plan, schedule = run_scheme(s, tasks, channels, params, config.kind)
            except InfeasiblePlanError as exc:
                raise InfeasiblePlanError(f"{where}: {exc}") from exc
            report = check_feasible(plan, tasks, channels, params)
            if not report.ok:
                raise InfeasiblePlanError(f"{where}: {report.first_violation()}")
            if on_plan is not None:
                on_plan(rep, s, plan, schedule, tasks, channels)
            values[s][rep] = plan.energy_per_slot(params)
    summary = {s: _summarise(values[s]) for s in schemes}
    return ScenarioResult(config, schemes, values, summary)

