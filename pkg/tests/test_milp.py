import itertools

import numpy as np
import pytest

from btsp.lp import EQ, GE, INFEASIBLE, LE, OPTIMAL, LpModel
from btsp.milp import MilpModel, solve_milp


def test_small_knapsack():
    # max 5y1 + 4y2 s.t. 3y1 + 2y2 <= 4, binary
    m = MilpModel(
        LpModel([5, 4], [[3, 2]], [LE], [4], [0, 0], [1, 1], "max"),
        [True, True],
    )
    sol = solve_milp(m)
    assert sol.status == OPTIMAL
    assert sol.obj == pytest.approx(5.0)
    assert np.allclose(sol.x, [1, 0])


def test_integral_flow_one_node():
    # unit-capacity path: node balance rows are totally unimodular, so the
    # root relaxation is already integral
    A = [
        [1, 0, 0],
        [-1, 1, 0],
        [0, -1, 1],
    ]
    m = MilpModel(
        LpModel([1, 1, 1], A, [EQ, EQ, EQ], [1, 0, 0], [0, 0, 0], [1, 1, 1], "min"),
        [True, True, True],
    )
    sol = solve_milp(m)
    assert sol.status == OPTIMAL
    assert sol.nodes == 1


def test_infeasible_binary_system():
    m = MilpModel(
        LpModel([0, 0], [[1, 1]], [LE], [0], [1, 0], [1, 1], "min"),
        [True, True],
    )
    assert solve_milp(m).status == INFEASIBLE


def _lattice_optimum(model: MilpModel):
    lp = model.lp
    best = None
    ranges = [range(int(lp.lb[j]), int(lp.ub[j]) + 1) for j in range(lp.nvars)]
    for pt in itertools.product(*ranges):
        x = np.array(pt, dtype=float)
        val = lp.A @ x
        ok = all(
            (v <= b + 1e-9) if r == LE else (v >= b - 1e-9) if r == GE else abs(v - b) <= 1e-9
            for v, r, b in zip(val, lp.rel, lp.b)
        )
        if not ok:
            continue
        obj = float(lp.c @ x)
        if best is None or (obj < best if lp.sense == "min" else obj > best):
            best = obj
    return best


def test_random_milps_match_lattice_enumeration():
    rng = np.random.default_rng(2024)
    solved = 0
    for _ in range(60):
        n = int(rng.integers(2, 7))
        mrows = int(rng.integers(1, 4))
        A = rng.integers(-3, 4, size=(mrows, n)).astype(float)
        x0 = rng.integers(0, 3, size=n).astype(float)
        rel = [(LE, GE)[rng.integers(0, 2)] for _ in range(mrows)]
        b = A @ x0 + np.array([1.0 if r == LE else -1.0 for r in rel]) * rng.uniform(0, 2, mrows)
        c = rng.integers(-5, 6, size=n).astype(float)
        ub = rng.integers(1, 4, size=n).astype(float)
        sense = "min" if rng.random() < 0.5 else "max"
        model = MilpModel(LpModel(c, A, rel, b, np.zeros(n), ub, sense), [True] * n)
        sol = solve_milp(model)
        ref = _lattice_optimum(model)
        if ref is None:
            assert sol.status == INFEASIBLE
            continue
        assert sol.status == OPTIMAL
        assert sol.obj == pytest.approx(ref, abs=1e-6)
        assert np.allclose(sol.x, np.round(sol.x), atol=1e-6)
        assert abs(sol.obj - sol.bound) <= max(1e-6, 1e-6 * abs(sol.obj))
        solved += 1
    assert solved >= 40


def test_mixed_integer_with_continuous_part():
    # one binary switch, one continuous flow
    m = MilpModel(
        LpModel(
            [-3, -1], [[1, 1], [0, 1]], [LE, LE], [2.5, 1.7], [0, 0], [1, 5], "min"
        ),
        [True, False],
    )
    sol = solve_milp(m)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.obj == pytest.approx(-3 - 1.5)


def test_node_limit_status():
    rng = np.random.default_rng(5)
    n = 12
    w = rng.integers(3, 20, size=n).astype(float)
    m = MilpModel(
        LpModel(-w, [w], [LE], [w.sum() / 2 + 0.37], np.zeros(n), np.ones(n), "min"),
        [True] * n,
    )
    sol = solve_milp(m, node_limit=3)
    assert sol.status == "node_limit"
