import itertools

import numpy as np
import pytest

from btsp.checks import random_minmin_instance, sample_x
from btsp.lp import GE, LE
from btsp.minmin import (
    compute_sigma_minmin,
    convexify,
    oracle_step,
    run,
    solve_dual_subproblem,
    solve_primal_subproblem,
)
from btsp.model import (
    MIN_MIN,
    BINARY,
    CONTINUOUS,
    INTEGER,
    BtspInstance,
    FirstStage,
    Scenario,
    brute_force_solve,
    evaluate_recourse,
)


def seed11():
    return random_minmin_instance(11, integer_y=True)


def _toy_integer_instance():
    """1 binary x, 2 integer y, a single covering row with a fractional
    LP vertex at x = 0."""
    first = FirstStage(
        n=1, c=[0.0], A=np.zeros((0, 1)), rel=[], b=[], kind=[BINARY],
        lb=[0.0], ub=[1.0], coupled=[0],
    )
    sc = Scenario(
        p=1.0,
        q=[3.0, 2.0],
        G=[[1.0, 0.0]],
        T=[[-1.0]],
        W=[[2.0, 3.0]],
        rel=[GE],
        r=[7.0],
        ykind=[INTEGER, INTEGER],
        ylb=[0.0, 0.0],
        yub=[4.0, 4.0],
    )
    return BtspInstance(first, [sc], MIN_MIN, name="oracle-toy")


def _enumerate_lifted(inst, w):
    """All integer (x, y) points of the lifted scenario set."""
    fs = inst.first
    sc = inst.scenarios[w]
    pts = []
    xr = [range(int(fs.lb[i]), int(fs.ub[i]) + 1) for i in range(fs.n)]
    yr = [range(int(sc.ylb[j]), int(sc.yub[j]) + 1) for j in range(sc.n2)]
    for xt in itertools.product(*xr):
        x = np.array(xt, dtype=float)
        ok_x = all(
            (fs.A[i] @ x <= fs.b[i] + 1e-9) if fs.rel[i] == LE else (fs.A[i] @ x >= fs.b[i] - 1e-9)
            for i in range(fs.A.shape[0])
        )
        if not ok_x:
            continue
        for yt in itertools.product(*yr):
            y = np.array(yt, dtype=float)
            vals = sc.W @ y
            rhs = sc.r - sc.T @ x
            ok = all(
                (vals[k] >= rhs[k] - 1e-9) if sc.rel[k] == GE else (vals[k] <= rhs[k] + 1e-9)
                for k in range(sc.m2)
            )
            if ok:
                pts.append((x, y))
    return pts


def test_primal_equals_recourse_for_continuous_y():
    inst = random_minmin_instance(3, integer_y=False)
    convs = [convexify(sc, inst.first.n) for sc in inst.scenarios]
    for x in sample_x(inst.first, 6):
        for w in range(inst.nscen):
            val, _ = solve_primal_subproblem(convs[w], inst.scenarios[w], x)
            assert val == pytest.approx(evaluate_recourse(inst, x, w), abs=1e-7)


def test_primal_is_relaxation_for_integer_y():
    inst = seed11()
    convs = [convexify(sc, inst.first.n) for sc in inst.scenarios]
    for x in sample_x(inst.first, 6):
        for w in range(inst.nscen):
            val, _ = solve_primal_subproblem(convs[w], inst.scenarios[w], x)
            assert val <= evaluate_recourse(inst, x, w) + 1e-7


def test_oracle_appends_valid_rows():
    inst = _toy_integer_instance()
    conv = convexify(inst.scenarios[0], 1)
    x = np.array([0.0])
    val, y = solve_primal_subproblem(conv, inst.scenarios[0], x)
    assert abs(y[0] - round(y[0])) > 1e-6 or abs(y[1] - round(y[1])) > 1e-6
    pts = _enumerate_lifted(inst, 0)
    assert len(pts) <= 100
    rounds = 0
    while rounds < conv.m + 5:
        y, integral, appended = oracle_step(conv, inst.scenarios[0], inst.first, x)
        if integral:
            break
        assert appended
        t_part, w_part, rhs = conv.T[-1], conv.W[-1], conv.r[-1]
        for xp, yp in pts:
            assert t_part @ xp + w_part @ yp >= rhs - 1e-7
        rounds += 1
    assert integral
    val2, _ = solve_primal_subproblem(conv, inst.scenarios[0], x)
    assert val2 == pytest.approx(evaluate_recourse(inst, x, 0), abs=1e-6)


def test_oracle_skipped_when_integral():
    inst = random_minmin_instance(4, integer_y=False)
    conv = convexify(inst.scenarios[0], inst.first.n)
    x = sample_x(inst.first, 1)[0]
    m_before = conv.m
    _, integral, appended = oracle_step(conv, inst.scenarios[0], inst.first, x)
    assert integral and not appended
    assert conv.m == m_before


def test_dual_decouples_when_g_zero():
    inst = random_minmin_instance(5, integer_y=False)
    for sc in inst.scenarios:
        sc.G = np.zeros_like(sc.G)
    sigma = compute_sigma_minmin(inst)
    sigma.values[:] = np.maximum(sigma.values, 1.0)
    convs = [convexify(sc, inst.first.n) for sc in inst.scenarios]
    for x in sample_x(inst.first, 4):
        _, _, z = solve_dual_subproblem(convs[0], inst.scenarios[0], inst.first, sigma, x)
        assert np.allclose(z, x, atol=1e-6)


def test_dual_matches_lp_dual_plus_sigma_term():
    inst = random_minmin_instance(6, integer_y=False)
    sigma = compute_sigma_minmin(inst)
    convs = [convexify(sc, inst.first.n) for sc in inst.scenarios]
    for x in sample_x(inst.first, 4):
        for w in range(inst.nscen):
            val, _ = solve_primal_subproblem(convs[w], inst.scenarios[w], x)
            qhat, _, _ = solve_dual_subproblem(convs[w], inst.scenarios[w], inst.first, sigma, x)
            assert qhat - float(sigma.values @ x) == pytest.approx(val, abs=1e-5)


def test_dual_after_full_convexification_equals_recourse():
    inst = _toy_integer_instance()
    conv = convexify(inst.scenarios[0], 1)
    sigma = compute_sigma_minmin(inst)
    for x in ([0.0], [1.0]):
        x = np.array(x)
        for _ in range(conv.m + 5):
            _, integral, _ = oracle_step(conv, inst.scenarios[0], inst.first, x)
            if integral:
                break
        assert integral
    for x in ([0.0], [1.0]):
        x = np.array(x)
        qhat, _, _ = solve_dual_subproblem(conv, inst.scenarios[0], inst.first, sigma, x)
        q = evaluate_recourse(inst, x, 0)
        assert qhat - float(sigma.values @ x) == pytest.approx(q, abs=1e-5)


def test_run_continuous_y_matches_brute_force():
    for seed in (3, 5, 6):
        inst = random_minmin_instance(seed, integer_y=False)
        _, vb = brute_force_solve(inst)
        res = run(inst, tol=0.0)
        assert res.status == "optimal"
        assert res.objective == pytest.approx(vb, abs=1e-6), f"seed {seed}"


def test_run_integer_y_matches_brute_force():
    for seed in (11, 12):
        inst = random_minmin_instance(seed, integer_y=True)
        _, vb = brute_force_solve(inst)
        res = run(inst, tol=0.0)
        assert res.status == "optimal"
        assert res.objective == pytest.approx(vb, abs=1e-6), f"seed {seed}"


def test_run_classical_instance_matches_extensive_form():
    # G = 0: the plain L-shaped setting; oracle against the extensive MILP
    inst = random_minmin_instance(8, integer_y=True)
    for sc in inst.scenarios:
        sc.G = np.zeros_like(sc.G)
    from btsp.baselines import build_extensive_form
    from btsp.backend import default_engine

    res = run(inst, tol=0.0)
    de = default_engine().solve_milp(build_extensive_form(inst))
    assert de.status == "optimal"
    assert res.objective == pytest.approx(de.obj, abs=1e-6)


def test_bounds_monotone():
    inst = seed11()
    res = run(inst, tol=0.0)
    lbs = [l.lb for l in res.logs]
    ubs = [l.ub for l in res.logs]
    assert all(b2 >= b1 - 1e-9 for b1, b2 in zip(lbs, lbs[1:]))
    assert all(u2 <= u1 + 1e-9 for u1, u2 in zip(ubs, ubs[1:]))
    assert res.logs[-1].ub >= res.logs[-1].lb - 1e-7
