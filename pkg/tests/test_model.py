import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpmec import DomainError, Mode, SystemParams
from wpmec.model import (
    AllocationPlan,
    ChannelTrace,
    TaskTrace,
    bits_of_level,
    harvested_energy,
    local_bits_of_level,
    local_energy,
    offl_bits_of_level,
    offload_energy,
    offload_threshold,
    solve_level,
    solve_levels,
)

P = SystemParams()

# hand-evaluated reference values
LOCAL_1E5 = 8e-6                  # 1e-29 * 200**3 * 1e15 / 0.01
OFFL_UNIT = 1e-4                  # 0.1 * 1e-9 / 1e-6
HARVEST = 3e-6                    # 0.1 * 0.3 * 1e-4 * 1
THRESHOLD = 1e-9 * math.log(2) / (1e6 * 3e-5 * 1e-6)


def test_local_energy_values():
    assert local_energy(0.0, P) == 0.0
    assert local_energy(1e5, P) == pytest.approx(LOCAL_1E5, rel=1e-12)
    assert local_energy(2e5, P) == pytest.approx(8 * local_energy(1e5, P), rel=1e-12)
    with pytest.raises(DomainError):
        local_energy(-1.0, P)


def test_offload_energy_values():
    assert offload_energy(0.0, 1e-6, P) == 0.0
    assert offload_energy(1e5, 1e-6, P) == pytest.approx(OFFL_UNIT, rel=1e-12)
    assert offload_energy(2e5, 1e-6, P) == pytest.approx(3 * OFFL_UNIT, rel=1e-12)
    with pytest.raises(DomainError):
        offload_energy(1.0, 0.0, P)


def test_snr_gap_scales_offload_energy():
    p2 = SystemParams(snr_gap=2.0)
    assert offload_energy(1e5, 1e-6, p2) == pytest.approx(2 * OFFL_UNIT, rel=1e-12)


def test_harvested_energy_values():
    assert harvested_energy(0.0, 1e-4, P) == 0.0
    assert harvested_energy(1.0, 1e-4, P) == pytest.approx(HARVEST, rel=1e-12)
    assert harvested_energy(2.0, 1e-4, P) == pytest.approx(2 * HARVEST, rel=1e-12)
    with pytest.raises(DomainError):
        harvested_energy(-1.0, 1e-4, P)


def test_local_bits_of_level():
    assert local_bits_of_level(0.0, 1e-4, P) == 0.0
    assert local_bits_of_level(8e-6, 1e-4, P) == pytest.approx(1e5, rel=1e-12)
    assert local_bits_of_level(-1.0, 1e-4, P) == 0.0


def test_offl_bits_of_level():
    h_eff = 1e-4  # eta * h_eff = 3e-5
    thr = offload_threshold(h_eff, 1e-6, P)
    assert thr == pytest.approx(THRESHOLD, rel=1e-12)
    assert thr == pytest.approx(2.3105e-5, rel=1e-4)
    assert offl_bits_of_level(thr, h_eff, 1e-6, P) == 0.0
    assert offl_bits_of_level(0.5 * thr, h_eff, 1e-6, P) == 0.0
    assert offl_bits_of_level(2 * thr, h_eff, 1e-6, P) == pytest.approx(1e5, rel=1e-12)
    assert offl_bits_of_level(4 * thr, h_eff, 1e-6, P) == pytest.approx(2e5, rel=1e-12)


def test_solve_level_examples():
    assert solve_level(0.0, [1e-4], [1e-6], P) == 0.0
    assert solve_level(1e5, [1e-4], [1e-6], P, Mode.LOCAL_ONLY) == pytest.approx(8e-6, rel=1e-10)
    one = solve_level(3e5, [1e-4], [1e-6], P)
    two = solve_level(6e5, [1e-4, 1e-4], [1e-6, 1e-6], P)
    assert two == pytest.approx(one, rel=1e-10)


def test_solve_level_offload_only_inverse():
    thr = offload_threshold(1e-4, 1e-6, P)
    lvl = solve_level(2e5, [1e-4], [1e-6], P, Mode.OFFLOAD_ONLY)
    assert lvl == pytest.approx(4 * thr, rel=1e-10)


def test_solve_levels_rejects_bad_input():
    with pytest.raises(DomainError):
        solve_levels([-1.0], [[1.0]], [1e-4], [1e-6], P)
    with pytest.raises(DomainError):
        solve_levels([1.0], [[1.0, 1.0]], [1e-4], [1e-6], P)
    with pytest.raises(ValueError):
        solve_levels([1.0], [[1.0]], [1e-4], [1e-6], P, method="secant")


def test_params_validation():
    for bad in (dict(slot_len=0), dict(eh_efficiency=1.5), dict(num_slots=0),
                dict(online_gamma=1.0), dict(snr_gap=0.5), dict(num_slots=2.5)):
        with pytest.raises(DomainError):
            SystemParams(**bad)


def test_trace_validation():
    with pytest.raises(DomainError):
        TaskTrace([1.0, -1.0])
    with pytest.raises(DomainError):
        ChannelTrace([1.0, 0.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        ChannelTrace([1.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        AllocationPlan([1.0], [1.0, 2.0], [0.0])


def test_plan_objective():
    plan = AllocationPlan([1.0, 3.0], [0.0, 0.0], [0.0, 0.0])
    assert plan.objective(P) == pytest.approx(0.4)
    assert plan.energy_per_slot(P) == pytest.approx(0.2)


gains = st.floats(1e-7, 1e-2)
bits = st.floats(0.0, 2e6)
modes = st.sampled_from(list(Mode))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(gains, gains), min_size=1, max_size=6), bits, modes)
def test_solve_level_reproduces_target(slots, target, mode):
    h = np.array([s[0] for s in slots])
    g = np.array([s[1] for s in slots])
    lvl = solve_level(target, h, g, P, mode)
    loc, off = bits_of_level(lvl, h, g, P, mode)
    assert math.fsum(np.broadcast_to(loc + off, h.shape)) == pytest.approx(target, rel=1e-8, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(gains, gains), min_size=1, max_size=4), st.floats(1.0, 2e6), modes)
def test_newton_agrees_with_bisection(slots, target, mode):
    h = np.array([s[0] for s in slots])
    g = np.array([s[1] for s in slots])
    a = solve_level(target, h, g, P, mode, method="newton")
    b = solve_level(target, h, g, P, mode, method="bisect")
    assert a == pytest.approx(b, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(bits, bits, st.floats(0.0, 1.0), gains)
def test_energies_convex(a, b, lam, g):
    mid = lam * a + (1 - lam) * b
    for f in (lambda x: local_energy(x, P), lambda x: offload_energy(x, g, P)):
        assert f(mid) <= lam * f(a) + (1 - lam) * f(b) + 1e-12 * (f(a) + f(b)) + 1e-300


@settings(max_examples=200, deadline=None)
@given(gains, gains, st.floats(0.0, 1e3))
def test_offloading_starts_above_threshold(h, g, factor):
    thr = offload_threshold(h, g, P)
    level = thr * factor
    d = offl_bits_of_level(level, h, g, P)
    assert (d > 0) == (level > thr)


@settings(max_examples=100, deadline=None)
@given(gains, gains, st.floats(1e-9, 1.0), st.floats(1.0, 10.0))
def test_total_bits_nondecreasing_in_level(h, g, level, scale):
    lo = sum(bits_of_level(level, h, g, P))
    hi = sum(bits_of_level(level * scale, h, g, P))
    assert hi >= lo
