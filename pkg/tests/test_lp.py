import numpy as np
import pytest
from scipy.optimize import linprog

from btsp.lp import (
    EQ,
    GE,
    INFEASIBLE,
    ITER_LIMIT,
    LE,
    OPTIMAL,
    UNBOUNDED,
    LpModel,
    solve_lp,
)


def test_symmetric_lp_dual():
    # max y1 + y2 s.t. y1 + y2 <= 1
    m = LpModel([1, 1], [[1, 1]], [LE], [1], [0, 0], [np.inf, np.inf], "max")
    sol = solve_lp(m)
    assert sol.status == OPTIMAL
    assert sol.obj == pytest.approx(1.0, abs=1e-9)
    assert sol.duals[0] == pytest.approx(1.0, abs=1e-9)


def test_example_recourse_lp():
    # two-piece recourse at x=0.5, scenario 2/3: value (1+3x)(w-x) = 2.5/6
    x, w = 0.5, 2.0 / 3.0
    m = LpModel(
        [1 + x, 1 + 3 * x],
        [[1, 0], [0, 1]],
        [GE, GE],
        [x - w, w - x],
        [0, 0],
        [10, 10],
        "min",
    )
    sol = solve_lp(m)
    assert sol.status == OPTIMAL
    assert sol.obj == pytest.approx(2.5 / 6.0, abs=1e-9)


def test_infeasible_row_bounds():
    m = LpModel([1.0], [[1.0]], [LE], [-1.0], [0.0], [np.inf], "min")
    assert solve_lp(m).status == INFEASIBLE


def test_unbounded():
    m = LpModel([1.0], np.zeros((0, 1)), [], [], [0.0], [np.inf], "max")
    assert solve_lp(m).status == UNBOUNDED


def test_iter_limit():
    m = LpModel(
        [1, 1, 1],
        [[1, 2, 3], [3, 1, 2], [2, 3, 1]],
        [GE, GE, GE],
        [6, 6, 6],
        [0, 0, 0],
        [9, 9, 9],
        "min",
    )
    assert solve_lp(m, pivot_cap=1).status == ITER_LIMIT
    assert solve_lp(m).status == OPTIMAL


def test_equality_and_free_variable():
    # min x + y s.t. x - y = 2, y free
    m = LpModel([1, 1], [[1, -1]], [EQ], [2], [0, -np.inf], [5, np.inf], "min")
    sol = solve_lp(m)
    assert sol.status == OPTIMAL
    assert sol.obj == pytest.approx(-2.0, abs=1e-8)
    assert sol.x[0] - sol.x[1] == pytest.approx(2.0, abs=1e-8)


def _random_model(rng):
    n = rng.integers(2, 7)
    m = rng.integers(1, 6)
    A = rng.integers(-4, 5, size=(m, n)).astype(float)
    x0 = rng.integers(0, 3, size=n).astype(float)  # kept feasible on purpose
    rel = [(LE, GE, EQ)[rng.integers(0, 3)] for _ in range(m)]
    b = A @ x0 + np.array([0.0 if r == EQ else (1.0 if r == LE else -1.0) for r in rel]) * rng.uniform(
        0, 3, size=m
    )
    c = rng.integers(-5, 6, size=n).astype(float)
    lb = np.zeros(n)
    ub = np.full(n, 6.0)
    sense = "min" if rng.random() < 0.5 else "max"
    return LpModel(c, A, rel, b, lb, ub, sense)


def _scipy_solve(model):
    c = model.c if model.sense == "min" else -model.c
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for i, r in enumerate(model.rel):
        if r == LE:
            A_ub.append(model.A[i])
            b_ub.append(model.b[i])
        elif r == GE:
            A_ub.append(-model.A[i])
            b_ub.append(-model.b[i])
        else:
            A_eq.append(model.A[i])
            b_eq.append(model.b[i])
    res = linprog(
        c,
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq) if A_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=list(zip(model.lb, model.ub)),
        method="highs",
    )
    return res


def test_random_lps_match_scipy():
    rng = np.random.default_rng(1234)
    solved = 0
    for _ in range(120):
        model = _random_model(rng)
        sol = solve_lp(model)
        ref = _scipy_solve(model)
        if ref.status == 2:
            assert sol.status == INFEASIBLE
            continue
        assert ref.status == 0 and sol.status == OPTIMAL
        ref_obj = ref.fun if model.sense == "min" else -ref.fun
        assert sol.obj == pytest.approx(ref_obj, abs=1e-6, rel=1e-6)
        solved += 1
    assert solved > 60


def test_duality_and_complementary_slackness():
    rng = np.random.default_rng(99)
    for _ in range(80):
        model = _random_model(rng)
        sol = solve_lp(model)
        if sol.status != OPTIMAL:
            continue
        # dual objective reconstructed from duals + reduced costs at bounds
        dual_obj = float(sol.duals @ model.b)
        for j in range(model.nvars):
            if abs(sol.reduced_costs[j]) > 1e-9:
                dual_obj += sol.reduced_costs[j] * sol.x[j]
        assert abs(dual_obj - sol.obj) <= 1e-6 * (1 + abs(sol.obj))
        # complementary slackness per row
        row_val = model.A @ sol.x
        for i, r in enumerate(model.rel):
            if r == EQ:
                continue
            slack = model.b[i] - row_val[i] if r == LE else row_val[i] - model.b[i]
            assert abs(sol.duals[i] * slack) <= 1e-5 * (1 + abs(sol.obj))


def test_ge_row_dual_sign_under_min():
    rng = np.random.default_rng(7)
    for _ in range(40):
        model = _random_model(rng)
        model.sense = "min"
        sol = solve_lp(model)
        if sol.status != OPTIMAL:
            continue
        for i, r in enumerate(model.rel):
            if r == GE:
                assert sol.duals[i] >= -1e-7
            elif r == LE:
                assert sol.duals[i] <= 1e-7
