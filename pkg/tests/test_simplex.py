import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from gridmc import simplex


def test_small_lp():
    # max x + y  s.t. x + 2y <= 4, 3x + y <= 6
    res = simplex.linprog([-1, -1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    assert res.status == simplex.OPTIMAL
    assert res.x == pytest.approx([1.6, 1.2])
    assert res.objective == pytest.approx(-2.8)


def test_upper_bounds_and_equality():
    res = simplex.linprog([1, 2, 3], A_eq=[[1, 1, 1]], b_eq=[5], upper=[2, 2, 10])
    assert res.status == simplex.OPTIMAL
    assert res.x == pytest.approx([2, 2, 1])


def test_negative_rhs_rows():
    # x >= 2 written as -x <= -2.
    res = simplex.linprog([1], A_ub=[[-1]], b_ub=[-2])
    assert res.x == pytest.approx([2.0])


def test_infeasible():
    res = simplex.linprog([1, 1], A_eq=[[1, 1]], b_eq=[5], upper=[1, 1])
    assert res.status == simplex.INFEASIBLE


def test_unbounded():
    res = simplex.linprog([-1, 0], A_ub=[[0, 1]], b_ub=[1])
    assert res.status == simplex.UNBOUNDED


@pytest.mark.parametrize("rule", ["dantzig", "bland"])
def test_classic_cycling_example_terminates(rule):
    # Beale's example cycles under the textbook rule without safeguards.
    c = [-0.75, 20, -0.5, 6]
    A = [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]]
    res = simplex.linprog(c, A_ub=A, b_ub=[0, 0, 1], rule=rule)
    assert res.status == simplex.OPTIMAL
    assert res.objective == pytest.approx(-1.25)


def test_deterministic_vertex():
    c = [1, 1, 1]
    a = simplex.linprog(c, A_eq=[[1, 1, 1]], b_eq=[1])
    b = simplex.linprog(c, A_eq=[[1, 1, 1]], b_eq=[1])
    assert np.array_equal(a.x, b.x)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10_000))
def test_matches_scipy_on_random_bounded_lps(seed):
    rng = np.random.default_rng(seed)
    n, m_ub, m_eq = int(rng.integers(2, 7)), int(rng.integers(0, 5)), int(rng.integers(0, 3))
    c = rng.normal(size=n)
    upper = rng.uniform(0.5, 5, n)
    x0 = rng.uniform(0, 1, n) * upper  # guarantees feasibility
    A_ub = rng.normal(size=(m_ub, n))
    b_ub = A_ub @ x0 + rng.uniform(0, 1, m_ub)
    A_eq = rng.normal(size=(m_eq, n))
    b_eq = A_eq @ x0
    ours = simplex.linprog(c, A_ub, b_ub, A_eq, b_eq, upper)
    ref = scipy.optimize.linprog(
        c, A_ub=A_ub if m_ub else None, b_ub=b_ub if m_ub else None,
        A_eq=A_eq if m_eq else None, b_eq=b_eq if m_eq else None,
        bounds=list(zip(np.zeros(n), upper)), method="highs",
    )
    assert ref.status == 0
    assert ours.status == simplex.OPTIMAL
    assert ours.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)
    assert np.all(ours.x >= -1e-9) and np.all(ours.x <= upper + 1e-9)
    if m_ub:
        assert np.all(A_ub @ ours.x <= b_ub + 1e-7)
    if m_eq:
        assert np.allclose(A_eq @ ours.x, b_eq, atol=1e-7)
