import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpmec import (
    ChannelTrace,
    DomainError,
    Mode,
    cds_power,
    check_feasible,
    check_structure,
    compute_cds,
    myopic,
    solve_fading,
    solve_sp,
    solve_static,
)
from wpmec.model import slot_energy
from wpmec.verify import grid_oracle

from conftest import make_instance

S = 1e-5  # gain scale for hand-built traces


def test_cds_examples():
    cds = compute_cds([1, 3, 2, 5, 4])
    assert cds.cds_slots == (1, 2, 4)
    np.testing.assert_array_equal(cds.effective_gains, [1, 3, 3, 5, 5])
    assert compute_cds([1, 2, 3]).cds_slots == (1, 2, 3)
    dec = compute_cds([3, 2, 1])
    assert dec.cds_slots == (1,)
    np.testing.assert_array_equal(dec.effective_gains, [3, 3, 3])
    # ties do not open a new CDS
    assert compute_cds([2, 2, 3]).cds_slots == (1, 3)
    with pytest.raises(DomainError):
        compute_cds([])


def test_cds_power_hand_example():
    tasks, ch, p = make_instance([1e5, 2e5, 3e5], np.array([4, 1, 9]) * S, 1e-6)
    loc = np.array([1e5, 2e5, 1e5])
    off = np.array([0.0, 0.0, 2e5])
    e = slot_energy(loc, off, ch.offl_gain, p)
    pw = cds_power(loc, off, ch, p)
    k = p.slot_len * p.eh_efficiency
    np.testing.assert_allclose(pw, [(e[0] + e[1]) / (k * 4 * S), 0.0, e[2] / (k * 9 * S)], rtol=1e-12)


def test_cds_power_trivial_cases():
    tasks, ch, p = make_instance([0, 0], [S, 2 * S], 1e-6)
    assert not cds_power([0, 0], [0, 0], ch, p).any()
    tasks, ch, p = make_instance([1e5], [S], 1e-6)
    e = slot_energy(1e5, 0.0, 1e-6, p)
    assert cds_power([1e5], [0.0], ch, p)[0] == pytest.approx(
        e / (p.slot_len * p.eh_efficiency * S), rel=1e-12)


def test_solve_sp_examples():
    tasks, ch, p = make_instance([0, 0, 5e5], [S, 2 * S, 3 * S], 1e-6)
    sp = solve_sp(1, 2, tasks, ch, p)
    assert sp.level == 0.0 and not sp.local_bits.any() and not sp.offl_bits.any()

    tasks, ch, p = make_instance([2e5], [3 * S], 1e-6)
    sp = solve_sp(1, 1, tasks, ch, p, Mode.LOCAL_ONLY)
    assert sp.local_bits[0] == pytest.approx(2e5, rel=1e-10)
    analytic = 3 * p.cpu_coeff * 2e5 ** 2 / (p.eh_efficiency * 3 * S * p.slot_len ** 2)
    assert sp.level == pytest.approx(analytic, rel=1e-10)

    tasks, ch, p = make_instance([7e5, 1e5], [S, S], 1e-6)
    sp = solve_sp(1, 2, tasks, ch, p)
    np.testing.assert_allclose(sp.local_bits + sp.offl_bits, 4e5, rtol=1e-10)
    with pytest.raises(DomainError):
        solve_sp(2, 1, tasks, ch, p)


def test_static_trace_matches_static_solver():
    a = [4e5, 1e5, 4e5, 0.0, 6e5, 2e5]
    tasks, ch, p = make_instance(a, 3e-5, 6e-7)
    fad, _ = solve_fading(tasks, ch, p)
    sta, _ = solve_static(tasks, 3e-5, 6e-7, p)
    np.testing.assert_allclose(fad.local_bits, sta.local_bits, rtol=1e-8)
    np.testing.assert_allclose(fad.offl_bits, sta.offl_bits, rtol=1e-8, atol=1e-8)
    assert fad.objective(p) == pytest.approx(sta.objective(p), rel=1e-8)


def test_two_slot_instance_matches_oracle():
    # arrivals only in slot 1, slot 2 has the better WPT and offloading gains
    tasks, ch, p = make_instance([8e5, 0.0], [S, 2 * S], [1e-7, 1e-6])
    plan, sched = solve_fading(tasks, ch, p)
    oracle = grid_oracle(tasks, ch, p)
    assert plan.objective(p) <= oracle.objective * (1 + 1e-9)
    assert plan.objective(p) == pytest.approx(oracle.objective, rel=5e-3)
    assert sched.transition_slots == (2,)


def test_zero_arrivals_fading():
    tasks, ch, p = make_instance([0, 0, 0], [S, 3 * S, 2 * S], 1e-6)
    plan, _ = solve_fading(tasks, ch, p)
    assert not plan.power.any() and not plan.executed_bits.any()


def test_power_only_at_cds():
    tasks, ch, p = make_instance([3e5, 1e5, 4e5, 2e5, 5e5], np.array([1, 3, 2, 5, 4]) * S, 1e-6)
    plan, _ = solve_fading(tasks, ch, p)
    assert set(np.flatnonzero(plan.power) + 1) <= {1, 2, 4}


trace = st.integers(1, 20).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0.0, 1e6), min_size=n, max_size=n),
    st.lists(st.floats(1e-6, 1e-3), min_size=n, max_size=n),
    st.lists(st.floats(1e-8, 1e-5), min_size=n, max_size=n)))
modes = st.sampled_from(list(Mode))


@settings(max_examples=150, deadline=None)
@given(trace, modes)
def test_fading_plans_are_feasible_and_structured(tr, mode):
    tasks, ch, p = make_instance(*tr)
    plan, sched = solve_fading(tasks, ch, p, mode)
    assert check_feasible(plan, tasks, ch, p).ok
    report = check_structure(plan, sched, tasks, ch, p, "fading", mode)
    assert report.ok, report.failures


@settings(max_examples=100, deadline=None)
@given(trace)
def test_fading_dominates_restricted_and_myopic(tr):
    tasks, ch, p = make_instance(*tr)
    best = solve_fading(tasks, ch, p)[0].objective(p)
    others = [solve_fading(tasks, ch, p, m)[0].objective(p)
              for m in (Mode.LOCAL_ONLY, Mode.OFFLOAD_ONLY)]
    others.append(myopic(tasks, ch, p).objective(p))
    for o in others:
        assert best <= o * (1 + 1e-9) + 1e-30


def test_channel_trace_rejects_mismatch():
    with pytest.raises(DomainError):
        solve_fading(make_instance([1.0, 2.0], S, 1e-6)[0], ChannelTrace([S], [1e-6]),
                     make_instance([1.0], S, 1e-6)[2])
