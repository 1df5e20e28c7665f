import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridmc.powerflow import topology
from gridmc.splitting import handle_split, split_children

from conftest import make_model


def chain():
    # 1 - 2 - 3 - 4 with generation on the left and load on both sides.
    return make_model(
        4,
        [(1, 2, 0.1, 100.0), (2, 3, 0.1, 100.0), (3, 4, 0.1, 100.0)],
        gens=[(1, 200.0, 1), (4, 30.0, 1)],
        loads=[(2, 40.0), (3, 25.0), (4, 20.0), (4, 15.0)],
    )


def test_children_detected_only_on_split():
    m = chain()
    whole = topology(m)
    cut = topology(m, np.array([True, False, True]))
    assert split_children(whole, whole) == []
    assert sorted(split_children(whole, cut)) == [0, 1]
    # Reconnecting is not a split.
    assert split_children(cut, whole) == []


def test_deficit_child_sheds_until_fit_surplus_child_curtails():
    m = chain()
    cut = topology(m, np.array([True, False, True]))
    served = np.array([40.0, 25.0, 20.0, 15.0])
    out = np.array([70.0, 30.0])
    ev = handle_split(m, cut, split_children(topology(m), cut), np.ones(2, bool), served, 5.0,
                      np.random.default_rng(1), out)
    right = cut.labels[2]
    left = cut.labels[0]
    assert ev.imbalance[right] == pytest.approx(30.0 - 60.0)
    assert ev.imbalance[left] == pytest.approx(200.0 - 40.0)
    kept = served[[1, 2, 3]].sum() - served[ev.disconnected].sum()
    assert kept <= 30.0 and set(ev.disconnected) <= {1, 2, 3}
    assert ev.curtailed == pytest.approx(30.0)  # 70 MW made for 40 MW of load


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1, 80), min_size=4, max_size=4), st.floats(0, 150), st.integers(0, 2**32 - 1))
def test_children_end_balanced(demands, cap, seed):
    m = make_model(
        4,
        [(1, 2, 0.1, 100.0), (2, 3, 0.1, 100.0), (3, 4, 0.1, 100.0)],
        gens=[(1, 500.0, 1), (3, max(cap, 1e-3), 1)],
        loads=[(b, d) for b, d in zip((1, 2, 3, 4), demands)],
    )
    cut = topology(m, np.array([True, False, True]))
    served = np.array(demands)
    ev = handle_split(m, cut, split_children(topology(m), cut), np.ones(2, bool), served, 0.0,
                      np.random.default_rng(seed))
    left = served.copy()
    left[ev.disconnected] = 0.0
    for k in ev.children:
        on = cut.labels[m.arrays.load_bus] == k
        cap_k = m.arrays.gen_cap[cut.labels[m.arrays.gen_bus] == k].sum()
        assert left[on].sum() <= cap_k + 1e-9
    assert len(set(ev.disconnected)) == len(ev.disconnected)
