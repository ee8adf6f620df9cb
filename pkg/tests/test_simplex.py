import numpy as np
import pytest
from scipy.optimize import linprog

from privdet.simplex import LPInfeasible, LPUnbounded, solve_lp


def test_min_x_above_three():
    res = solve_lp(np.array([1.0]), a_ub=np.array([[-1.0]]), b_ub=np.array([-3.0]))
    assert res.x[0] == pytest.approx(3.0, abs=1e-12)
    assert res.objective == pytest.approx(3.0, abs=1e-12)


def test_simplex_vertex_on_probability_simplex():
    c = np.array([0.5, -1.0, 2.0, 0.25])
    res = solve_lp(c, a_eq=np.ones((1, 4)), b_eq=np.array([1.0]))
    expected = np.zeros(4)
    expected[np.argmin(c)] = 1.0
    assert np.allclose(res.x, expected, atol=1e-12)


def test_infeasible_detected():
    # x >= 2 and x <= 1 simultaneously
    a_ub = np.array([[-1.0], [1.0]])
    b_ub = np.array([-2.0, 1.0])
    with pytest.raises(LPInfeasible):
        solve_lp(np.array([1.0]), a_ub=a_ub, b_ub=b_ub)


def test_unbounded_detected():
    with pytest.raises(LPUnbounded):
        solve_lp(np.array([-1.0]), a_ub=np.array([[0.0]]), b_ub=np.array([1.0]))
    with pytest.raises(LPUnbounded):
        solve_lp(np.array([-1.0]))


def test_no_constraints_zero_optimum():
    res = solve_lp(np.array([1.0, 2.0]))
    assert np.array_equal(res.x, [0.0, 0.0])


def test_equalities_with_negative_rhs():
    # -x0 - x1 = -1 with min x0 -> x0 = 0, x1 = 1
    res = solve_lp(
        np.array([1.0, 0.0]), a_eq=np.array([[-1.0, -1.0]]), b_eq=np.array([-1.0])
    )
    assert np.allclose(res.x, [0.0, 1.0], atol=1e-12)


@pytest.mark.parametrize("seed", range(40))
def test_matches_scipy_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    m = int(rng.integers(1, 6))
    c = rng.normal(size=n)
    a_ub = rng.normal(size=(m, n))
    x_feas = rng.uniform(0.1, 1.0, size=n)
    b_ub = a_ub @ x_feas + rng.uniform(0.05, 1.0, size=m)
    a_eq = np.ones((1, n))
    b_eq = np.array([x_feas.sum()])
    ours = solve_lp(c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq)
    ref = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, method="highs")
    assert ref.status == 0
    assert ours.objective == pytest.approx(ref.fun, abs=1e-7)
    assert np.all(ours.x >= -1e-9)
    assert np.all(a_ub @ ours.x - b_ub <= 1e-8)
    assert np.abs(a_eq @ ours.x - b_eq).max() <= 1e-9


def test_degenerate_ratio_polytope_terminates():
    # ratio-budget-style program: many zero right-hand sides
    rng = np.random.default_rng(7)
    x_size, z_size, e = 6, 2, np.exp(1.0)
    nv = x_size * z_size
    rows = []
    for z in range(z_size):
        for x1 in range(x_size):
            for x2 in range(x_size):
                if x1 != x2:
                    r = np.zeros(nv)
                    r[x1 * z_size + z] = 1.0
                    r[x2 * z_size + z] -= e
                    rows.append(r)
    a_eq = np.zeros((x_size, nv))
    for x in range(x_size):
        a_eq[x, x * z_size:(x + 1) * z_size] = 1.0
    c = rng.normal(size=nv)
    res = solve_lp(c, a_ub=np.array(rows), b_ub=np.zeros(len(rows)), a_eq=a_eq, b_eq=np.ones(x_size))
    ref = linprog(c, A_ub=np.array(rows), b_ub=np.zeros(len(rows)), A_eq=a_eq, b_eq=np.ones(x_size), method="highs")
    assert res.objective == pytest.approx(ref.fun, abs=1e-8)


def test_deterministic_solutions():
    rng = np.random.default_rng(9)
    c = rng.normal(size=5)
    a_ub = rng.normal(size=(3, 5))
    b_ub = np.abs(rng.normal(size=3)) + 1
    a = solve_lp(c, a_ub=a_ub, b_ub=b_ub, a_eq=np.ones((1, 5)), b_eq=np.array([1.0]))
    b = solve_lp(c, a_ub=a_ub, b_ub=b_ub, a_eq=np.ones((1, 5)), b_eq=np.array([1.0]))
    assert a.x.tobytes() == b.x.tobytes()
