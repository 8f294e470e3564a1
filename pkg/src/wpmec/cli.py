"""Command-line front end: ``wpmec solve | sweep | verify``.

Configs are flat ``key = value`` files; ``#`` starts a comment. Keys are the
field names of ``SystemParams`` and ``GeometryConfig`` plus ``kind``, ``a_max``
and ``seed``. A fixed instance may be given with comma-separated ``arrivals``,
``wpt_gain`` and ``offl_gain`` lists (and optional ``mean_arrival``,
``mean_wpt``, ``mean_offl``); otherwise replication 0 of the seeded scenario is
used. Units are SI except ``pathloss_ref_db``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .baselines import solve_offline
from .model import (
    AllocationPlan,
    ChannelTrace,
    DomainError,
    Mode,
    SystemParams,
    TaskTrace,
    local_energy,
)
from .offline_fading import compute_cds
from .online import InfeasiblePlanError
from .scenario import (
    SCHEMES,
    GeometryConfig,
    ScenarioConfig,
    realization,
    run_montecarlo,
    run_scheme,
)
from .verify import MAX_ORACLE_SLOTS, check_feasible, check_structure, grid_oracle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4

TRACE_COLUMNS = ("slot", "A", "h", "g", "h_eff", "p", "l", "d",
                 "E_loc", "E_offl", "buffer", "battery")
SWEEP_COLUMNS = ("axis_value", "scheme", "mean_energy_per_slot", "stderr", "reps")
ORACLE_GAP = 0.005

# offline schemes whose plans must show the optimal structure, with their mode
STRUCTURED = {"offline": Mode.JOINT, "local_only": Mode.LOCAL_ONLY,
              "full_offload": Mode.OFFLOAD_ONLY}


class ConfigError(Exception):
    pass


class UsageError(Exception):
    pass


_PARAM_FIELDS = {f.name: f.type for f in dataclasses.fields(SystemParams)}
_GEOM_FIELDS = {f.name: f.type for f in dataclasses.fields(GeometryConfig)}
_LIST_KEYS = ("arrivals", "wpt_gain", "offl_gain")
_SCALAR_KEYS = ("mean_arrival", "mean_wpt", "mean_offl", "a_max")


@dataclasses.dataclass
class Instance:
    scenario: ScenarioConfig
    tasks: TaskTrace
    channels: ChannelTrace


def _number(key, text):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None
    return v


def _integer(key, text):
    v = _number(key, text)
    if v != int(v):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(v)


def read_config(path) -> dict[str, str]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    raw = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        raw[key] = value
    return raw


def build_scenario(raw: dict[str, str], seed: int | None = None) -> ScenarioConfig:
    params, geom = {}, {}
    extra = {}
    for key, value in raw.items():
        if key in _PARAM_FIELDS:
            params[key] = _integer(key, value) if key == "num_slots" else _number(key, value)
        elif key in _GEOM_FIELDS:
            geom[key] = _integer(key, value) if key == "num_antennas" else _number(key, value)
        elif key == "kind":
            extra["kind"] = value
        elif key == "seed":
            extra["seed"] = _integer(key, value)
        elif key == "a_max":
            extra["a_max"] = _number(key, value)
        elif key in _LIST_KEYS or key in _SCALAR_KEYS:
            continue
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if "arrivals" in raw and "num_slots" not in params:
        params["num_slots"] = len(_number_list("arrivals", raw["arrivals"]))
    if seed is not None:
        extra["seed"] = seed
    try:
        return ScenarioConfig(SystemParams(**params), GeometryConfig(**geom), **extra)
    except (DomainError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _number_list(key, text):
    parts = [p for p in (s.strip() for s in text.split(",")) if p]
    if not parts:
        raise ConfigError(f"{key}: empty list")
    return [_number(key, p) for p in parts]


def load_instance(raw: dict[str, str], seed: int | None = None) -> Instance:
    scenario = build_scenario(raw, seed)
    n = scenario.params.num_slots
    tasks, channels = realization(scenario, 0)
    try:
        if "arrivals" in raw:
            a = _number_list("arrivals", raw["arrivals"])
            mean = _number("mean_arrival", raw["mean_arrival"]) if "mean_arrival" in raw \
                else math.fsum(a) / len(a)
            tasks = TaskTrace(a, mean)
        if ("wpt_gain" in raw) != ("offl_gain" in raw):
            raise ConfigError("wpt_gain and offl_gain must be given together")
        if "wpt_gain" in raw:
            channels = ChannelTrace(
                _number_list("wpt_gain", raw["wpt_gain"]),
                _number_list("offl_gain", raw["offl_gain"]),
                _number("mean_wpt", raw["mean_wpt"]) if "mean_wpt" in raw else float("nan"),
                _number("mean_offl", raw["mean_offl"]) if "mean_offl" in raw else float("nan"))
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if len(tasks) != n or len(channels) != n:
        raise ConfigError(f"instance lists must have num_slots={n} entries")
    if scenario.kind == "static" and not channels.is_static:
        raise ConfigError("kind = static needs constant gains")
    return Instance(scenario, tasks, channels)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def trace_rows(plan: AllocationPlan, inst: Instance) -> list[list]:
    params = inst.scenario.params
    tasks, ch = inst.tasks, inst.channels
    h_eff = compute_cds(ch.wpt_gain).effective_gains
    e_loc = local_energy(plan.local_bits, params)
    e_all = plan.consumption(ch, params)
    e_off = e_all - e_loc
    buffer = np.cumsum(tasks.arrivals) - np.cumsum(plan.executed_bits)
    battery = np.cumsum(plan.harvested(ch, params)) - np.cumsum(e_all)
    return [[i + 1, tasks.arrivals[i], ch.wpt_gain[i], ch.offl_gain[i], h_eff[i], plan.power[i],
             plan.local_bits[i], plan.offl_bits[i], e_loc[i], e_off[i], buffer[i], battery[i]]
            for i in range(len(plan))]


def write_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _run(scheme: str, inst: Instance):
    sc = inst.scenario
    if scheme in STRUCTURED:
        return solve_offline(inst.tasks, inst.channels, sc.params, STRUCTURED[scheme], sc.kind)
    return run_scheme(scheme, inst.tasks, inst.channels, sc.params, sc.kind)


def summary_dict(scheme, plan, schedule, inst: Instance, report) -> dict:
    sc = inst.scenario
    return {
        "scheme": scheme,
        "kind": sc.kind,
        "seed": sc.seed,
        "objective": plan.objective(sc.params),
        "energy_per_slot": plan.energy_per_slot(sc.params),
        "transitions": list(schedule.transition_slots) if schedule else None,
        "levels": list(schedule.levels) if schedule else None,
        "cds_slots": list(compute_cds(inst.channels.wpt_gain).cds_slots),
        "feasibility": {
            "ok": report.ok,
            "violations": report.violations,
            "completion_gap": report.completion_gap,
            "min_energy_slack": float(np.min(report.energy_slack)),
            "min_task_slack": float(np.min(report.task_slack)),
        },
        "params": dataclasses.asdict(sc.params),
        "geometry": dataclasses.asdict(sc.geometry),
        "a_max": sc.a_max,
    }


def cmd_solve(args) -> int:
    inst = load_instance(read_config(args.config), args.seed)
    scheme = _single_scheme(args)
    plan, schedule = _run(scheme, inst)
    report = check_feasible(plan, inst.tasks, inst.channels, inst.scenario.params)
    summary = _json(summary_dict(scheme, plan, schedule, inst, report))
    out = Path(args.out) if args.out else None
    if args.format == "json":
        _emit(summary, out)
    else:
        _emit(write_csv(TRACE_COLUMNS, trace_rows(plan, inst)), out)
        if out is not None:
            out.with_name(out.stem + ".summary.json").write_text(summary)
    if not report.ok:
        print(f"infeasible plan: {report.first_violation()}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _axis_config(base: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    try:
        if axis == "N":
            if value != int(value):
                raise ConfigError(f"N must be an integer, got {value!r}")
            return dataclasses.replace(base, params=base.params.with_slots(int(value)))
        if axis == "A_max":
            return dataclasses.replace(base, a_max=value)
        geom = dataclasses.replace(base.geometry, user_distance=value)
        return dataclasses.replace(base, geometry=geom)
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_sweep(args) -> int:
    base = build_scenario(read_config(args.config), args.seed)
    schemes = _scheme_list(args)
    if not args.values:
        raise ConfigError("--values needs at least one value")
    values = _number_list("--values", args.values)
    if args.axis == "N":
        values = [_integer("--values", v) for v in values]
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    rows = []
    for v in values:
        result = run_montecarlo(_axis_config(base, args.axis, v), schemes, args.reps)
        for s in schemes:
            m = result.summary[s]
            rows.append([v, s, m.mean, m.stderr, m.reps])
    out = Path(args.out) if args.out else None
    if args.format == "json":
        _emit(_json([dict(zip(SWEEP_COLUMNS, r)) for r in rows]), out)
    else:
        _emit(write_csv(SWEEP_COLUMNS, rows), out)
    return EXIT_OK


def read_plan(path, n: int) -> AllocationPlan:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        p = [float(r["p"]) for r in rows]
        loc = [float(r["l"]) for r in rows]
        off = [float(r["d"]) for r in rows]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot read plan file: {exc}") from None
    if len(p) != n:
        raise ConfigError(f"plan file has {len(p)} slots, instance has {n}")
    try:
        return AllocationPlan(p, loc, off)
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_verify(args) -> int:
    inst = load_instance(read_config(args.config), args.seed)
    sc = inst.scenario
    scheme = _single_scheme(args)
    plan, schedule = _run(scheme, inst)
    if args.plan:
        plan = read_plan(args.plan, len(inst.tasks))
    status = EXIT_OK

    report = check_feasible(plan, inst.tasks, inst.channels, sc.params)
    if report.ok:
        print("PASS feasibility")
    else:
        for v in report.violations:
            print(f"FAIL feasibility: {v}")
        status = EXIT_INFEASIBLE

    if scheme not in STRUCTURED:
        print(f"SKIP structure: {scheme} is not an offline-optimal scheme")
        print(f"SKIP oracle: {scheme} is not an offline-optimal scheme")
        return status
    mode = STRUCTURED[scheme]
    st = check_structure(plan, schedule, inst.tasks, inst.channels, sc.params, sc.kind, mode)
    for name, ok in st.checks.items():
        if ok:
            print(f"PASS structure {name}")
    for f in st.failures:
        print(f"FAIL structure {f}")
    if not st.ok and status == EXIT_OK:
        status = EXIT_VERIFY

    n = len(inst.tasks)
    if n > MAX_ORACLE_SLOTS:
        print(f"SKIP oracle: N={n} exceeds {MAX_ORACLE_SLOTS}")
        return status
    oracle = grid_oracle(inst.tasks, inst.channels, sc.params, mode, sc.kind).objective
    obj = plan.objective(sc.params)
    if oracle == 0.0:
        ok = obj <= 1e-300
        gap = 0.0
    else:
        gap = (oracle - obj) / oracle
        ok = -1e-9 <= gap <= ORACLE_GAP
    print(f"{'PASS' if ok else 'FAIL'} oracle: solver={obj!r} oracle={oracle!r} gap={gap!r}")
    if not ok and status == EXIT_OK:
        status = EXIT_VERIFY
    return status


def _scheme_list(args) -> list[str]:
    names = []
    for item in args.scheme or []:
        names.extend(s.strip() for s in item.split(",") if s.strip())
    if not names:
        raise UsageError("at least one --scheme is required")
    bad = [s for s in names if s not in SCHEMES]
    if bad:
        raise UsageError(f"unknown scheme(s) {bad}; choose from {list(SCHEMES)}")
    return list(dict.fromkeys(names))


def _single_scheme(args) -> str:
    names = _scheme_list(args)
    if len(names) != 1:
        raise UsageError("this command takes exactly one --scheme")
    return names[0]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wpmec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, multi):
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--scheme", action="append",
                       help=f"one of {', '.join(SCHEMES)}" + ("; repeat or comma-separate" if multi else ""))
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("solve", help="run one scheme on one instance")
    common(p, False)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over one axis")
    common(p, True)
    p.add_argument("--axis", choices=("N", "A_max", "distance"), required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--reps", type=int, default=1000)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check one scheme's plan")
    common(p, False)
    p.add_argument("--plan", help="trace CSV whose p, l, d columns replace the computed plan")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasiblePlanError as exc:
        print(f"infeasible plan: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
