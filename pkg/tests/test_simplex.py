from itertools import combinations

import numpy as np
import pytest

from persuasion_lab.errors import LPInfeasibleError
from persuasion_lab.simplex import solve_standard_form


def brute_force_optimum(A, b, c):
    """Enumerate basic feasible solutions; None when infeasible."""
    m, n = A.shape
    best = None
    for cols in combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        xb = np.linalg.solve(B, b)
        if np.any(xb < -1e-9):
            continue
        val = float(c[list(cols)] @ xb)
        if best is None or val > best:
            best = val
    return best


def test_simple_bounded_lp():
    # max 3x + 2y s.t. x + y <= 4, x + 3y <= 6 (slacks explicit)
    A = np.array([[1.0, 1.0, 1.0, 0.0], [1.0, 3.0, 0.0, 1.0]])
    b = np.array([4.0, 6.0])
    c = np.array([3.0, 2.0, 0.0, 0.0])
    res = solve_standard_form(A, b, c)
    assert res.objective == pytest.approx(12.0, abs=1e-9)
    assert res.x[:2] == pytest.approx([4.0, 0.0], abs=1e-9)


def test_equality_lp_with_known_solution():
    # max x1 + x2 on the segment x1 + x2 = 1
    A = np.array([[1.0, 1.0]])
    b = np.array([1.0])
    c = np.array([1.0, 1.0])
    res = solve_standard_form(A, b, c)
    assert res.objective == pytest.approx(1.0, abs=1e-12)


def test_infeasible_lp_raises():
    # x1 = 1 and x1 = 3 cannot both hold
    A = np.array([[1.0], [1.0]])
    b = np.array([1.0, 3.0])
    c = np.array([0.0])
    with pytest.raises(LPInfeasibleError):
        solve_standard_form(A, b, c)


def test_redundant_rows_are_tolerated():
    A = np.array([[1.0, 1.0], [2.0, 2.0]])
    b = np.array([1.0, 2.0])
    c = np.array([1.0, 0.0])
    res = solve_standard_form(A, b, c)
    assert res.objective == pytest.approx(1.0, abs=1e-9)


def test_degenerate_pivoting_terminates():
    # Beale's example: cycles under naive pivoting, Bland's rule terminates
    A = np.array(
        [
            [0.25, -60.0, -1.0 / 25.0, 9.0, 1.0, 0.0, 0.0],
            [0.5, -90.0, -1.0 / 50.0, 3.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ]
    )
    b = np.array([0.0, 0.0, 1.0])
    c = np.array([0.75, -150.0, 1.0 / 50.0, -6.0, 0.0, 0.0, 0.0])
    res = solve_standard_form(A, b, c)
    assert res.objective == pytest.approx(0.05, abs=1e-9)


def test_dual_certificate_and_gap():
    A = np.array([[1.0, 2.0, 1.0, 0.0], [3.0, 1.0, 0.0, 1.0]])
    b = np.array([4.0, 6.0])
    c = np.array([1.0, 1.0, 0.0, 0.0])
    res = solve_standard_form(A, b, c)
    assert res.duality_gap <= 1e-7
    assert res.dual @ b == pytest.approx(res.objective, abs=1e-7)
    # dual feasibility: reduced costs of all columns are nonpositive
    assert np.all(c - res.dual @ A <= 1e-7)


@pytest.mark.parametrize("seed", range(40))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    n = int(rng.integers(m + 1, m + 5))
    # row of ones keeps the feasible region bounded; b from a feasible point
    A = np.vstack([np.ones(n), rng.normal(size=(m - 1, n))]) if m > 1 else np.ones((1, n))
    x0 = rng.random(n)
    b = A @ x0
    if np.any(b < 0):
        A[b < 0] *= -1.0
        b = np.abs(b)
    c = rng.normal(size=n)
    res = solve_standard_form(A, b, c)
    oracle = brute_force_optimum(A, b, c)
    assert oracle is not None
    assert res.objective == pytest.approx(oracle, abs=1e-7)
    assert np.max(np.abs(A @ res.x - b)) <= 1e-7
    assert np.all(res.x >= -1e-9)


def test_iteration_counter_and_x_shape():
    A = np.array([[1.0, 1.0, 1.0]])
    b = np.array([2.0])
    c = np.array([0.0, 1.0, 2.0])
    res = solve_standard_form(A, b, c)
    assert res.x.shape == (3,)
    assert res.iterations >= 1
    assert res.objective == pytest.approx(4.0, abs=1e-12)
