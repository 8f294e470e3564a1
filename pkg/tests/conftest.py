import dataclasses
import functools

import numpy as np
import pytest

from wpmec import ChannelTrace, ScenarioConfig, SystemParams, TaskTrace, run_montecarlo
from wpmec.scenario import GeometryConfig


@pytest.fixture
def params():
    return SystemParams()


def make_instance(arrivals, h, g, params=None, mean_arrival=None):
    arrivals = np.asarray(arrivals, dtype=float)
    n = arrivals.size
    params = (params or SystemParams()).with_slots(n)
    mean = float(np.mean(arrivals)) if mean_arrival is None else mean_arrival
    h = np.broadcast_to(np.asarray(h, dtype=float), (n,))
    g = np.broadcast_to(np.asarray(g, dtype=float), (n,))
    return TaskTrace(arrivals, mean), ChannelTrace(h, g), params


@functools.lru_cache(maxsize=None)
def cached_montecarlo(kind, schemes, reps, seed=1, num_slots=50, a_max=5e5, distance=3.0):
    """Monte Carlo runs shared between acceptance tests within one session."""
    config = ScenarioConfig(
        params=SystemParams(num_slots=num_slots),
        geometry=GeometryConfig(user_distance=distance),
        kind=kind, a_max=a_max, seed=seed)
    return run_montecarlo(config, schemes, reps)


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line past pytest's capture, then assert."""

    def emit(criterion, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        assert ok, f"{criterion}: {detail}"

    return emit


def replace(obj, **kw):
    return dataclasses.replace(obj, **kw)
