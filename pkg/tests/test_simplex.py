import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fmpower.solve import simplex as sx


def vertex_optimum(c, A, b, lower, upper, tol=1e-9):
    """Best objective over every basic feasible point of ``A x >= b`` within the box."""
    m, n = A.shape
    G = np.vstack([A, np.eye(n), -np.eye(n)])
    h = np.concatenate([b, lower, -upper])
    best = np.inf
    for active in itertools.combinations(range(len(h)), n):
        sub = G[list(active)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, h[list(active)])
        if np.all(G @ x >= h - tol):
            best = min(best, float(c @ x))
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_5x5_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(-5, 6, (5, 5)).astype(float)
    b = rng.integers(-8, 4, 5).astype(float)
    c = rng.integers(-5, 6, 5).astype(float)
    lower, upper = np.zeros(5), rng.integers(1, 4, 5).astype(float)
    expected = vertex_optimum(c, A, b, lower, upper)
    res = sx.simplex(c, A, b, lower, upper)
    if np.isinf(expected):
        assert res.status == sx.INFEASIBLE
    else:
        assert res.status == sx.OPTIMAL
        assert res.objective == pytest.approx(expected, abs=1e-6)
        assert np.all(A @ res.x >= b - 1e-7)
        assert np.all(res.x >= lower - 1e-9) and np.all(res.x <= upper + 1e-9)
        assert float(c @ res.x) == pytest.approx(res.objective, abs=1e-7)


def test_one_row_hand_solution():
    # min s  s.t.  y + s >= 1.5, 0 <= y <= 1, s >= 0
    res = sx.simplex([0.0, 1.0], [[1.0, 1.0]], [1.5], [0.0, 0.0], [1.0, np.inf])
    assert res.status == sx.OPTIMAL
    assert res.x == pytest.approx([1.0, 0.5])


def test_infeasible_box():
    res = sx.simplex([1.0], [[1.0]], [2.0], [0.0], [1.0])
    assert res.status == sx.INFEASIBLE


def test_unbounded_detected():
    res = sx.simplex([-1.0, 0.0], [[1.0, -1.0]], [0.0], [0.0, 0.0], [np.inf, np.inf])
    assert res.status == sx.UNBOUNDED


def test_no_rows_uses_cheaper_bounds():
    res = sx.simplex([1.0, -2.0], np.zeros((0, 2)), [], [0.0, 0.5], [3.0, 4.0])
    assert res.x.tolist() == [0.0, 4.0] and res.objective == -8.0


def test_infinite_lower_bound_rejected():
    with pytest.raises(ValueError):
        sx.simplex([1.0], [[1.0]], [0.0], [-np.inf], [1.0])


def test_degenerate_problem_terminates():
    # many redundant rows through the same vertex
    A = np.array([[1, 1], [2, 2], [1, 2], [2, 1], [3, 3]], dtype=float)
    b = np.array([1, 2, 1.5, 1.5, 3])
    res = sx.simplex([1.0, 1.0], A, b, [0, 0], [5, 5], bland_after=0)
    assert res.status == sx.OPTIMAL and res.objective == pytest.approx(1.0)


def test_deterministic():
    rng = np.random.default_rng(9)
    A = rng.normal(size=(12, 8))
    b = rng.normal(size=12) - 3
    c = rng.normal(size=8)
    r1 = sx.simplex(c, A, b, np.zeros(8), np.ones(8))
    r2 = sx.simplex(c, A, b, np.zeros(8), np.ones(8))
    assert r1.status == r2.status and np.array_equal(r1.x, r2.x)
