import numpy as np
import pytest

from wpmec import full_offload, local_only, myopic, solve_offline
from wpmec.model import slot_energy

from conftest import make_instance

H, G = 3e-5, 6e-7


def test_zero_arrivals():
    tasks, ch, p = make_instance([0.0] * 4, [H, 2 * H, H, 3 * H], G)
    for plan in (local_only(tasks, ch, p), full_offload(tasks, ch, p), myopic(tasks, ch, p),
                 local_only(tasks, ch, p, offline=False), full_offload(tasks, ch, p, offline=False)):
        assert not plan.power.any() and not plan.executed_bits.any()


@pytest.mark.parametrize("kind", ["static", "fading"])
def test_single_branch_never_beats_joint(kind):
    rng = np.random.default_rng(3)
    for _ in range(20):
        h = H if kind == "static" else rng.uniform(1e-5, 1e-4, 8)
        tasks, ch, p = make_instance(rng.uniform(0, 1e6, 8), h, G)
        joint = solve_offline(tasks, ch, p, kind=kind)[0].objective(p)
        assert joint <= local_only(tasks, ch, p, kind=kind).objective(p) * (1 + 1e-9)
        assert joint <= full_offload(tasks, ch, p, kind=kind).objective(p) * (1 + 1e-9)


def test_single_interval_static_branches():
    tasks, ch, p = make_instance([3e5, 3e5, 3e5], H, G)
    lo = local_only(tasks, ch, p)
    np.testing.assert_allclose(lo.local_bits, 3e5, rtol=1e-10)
    assert not lo.offl_bits.any()
    fo = full_offload(tasks, ch, p)
    np.testing.assert_allclose(fo.offl_bits, 3e5, rtol=1e-10)
    assert not fo.local_bits.any()


def test_myopic_clears_each_slot():
    a = [2e5, 0.0, 7e5, 1e5]
    h = [H, 2 * H, 0.5 * H, H]
    tasks, ch, p = make_instance(a, h, G)
    plan = myopic(tasks, ch, p)
    np.testing.assert_allclose(plan.executed_bits, a, rtol=1e-10)
    assert plan.power[1] == 0.0
    e = slot_energy(plan.local_bits, plan.offl_bits, G, p)
    np.testing.assert_allclose(plan.power * p.slot_len * p.eh_efficiency * np.array(h), e, rtol=1e-12)
