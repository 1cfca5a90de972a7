import numpy as np
import pytest
from scipy.optimize import linprog

from btsp.checks import (
    check_cut_validity,
    check_strong_duality,
    random_minmax_instance,
    sample_x,
)
from btsp.lp import LE
from btsp.minmax import (
    INTERVAL,
    OPTIMIZATION,
    USER,
    build_cut,
    compute_sigma,
    run,
    solve_subproblem,
    user_sigma,
)
from btsp.model import (
    MIN_MAX,
    BINARY,
    CONTINUOUS,
    BtspInstance,
    FirstStage,
    Scenario,
    brute_force_solve,
    evaluate_recourse,
    objective_value,
)


def seed7():
    return random_minmax_instance(7, n1_max=2, nscen_max=2)


def _decoupled_instance(nscen=1):
    """G = 0 and no constraint coupling: a plain single-parameterized toy."""
    first = FirstStage(
        n=2, c=[1.0, -2.0], A=np.ones((1, 2)), rel=[LE], b=[2.0],
        kind=[BINARY, BINARY], lb=[0, 0], ub=[1, 1], coupled=[],
    )
    scen = [
        Scenario(
            p=1.0 / nscen,
            q=[3.0, 1.0],
            G=np.zeros((2, 2)),
            T=np.zeros((1, 2)),
            W=[[1.0, 2.0]],
            rel=[LE],
            r=[2.0 + w],
            ykind=[BINARY, BINARY],
            ylb=[0, 0],
            yub=[1, 1],
        )
        for w in range(nscen)
    ]
    return BtspInstance(first, scen, MIN_MAX, name="decoupled")


def test_sigma_empty_without_coupling():
    sig = compute_sigma(_decoupled_instance(), INTERVAL)
    assert np.all(sig.values == 0.0)


def test_user_sigma_tag():
    inst = seed7()
    sig = user_sigma(inst, 1e3)
    assert sig.provenance == USER
    assert np.all(sig.values[inst.first.coupled] == 1e3)


def _interval_oracle(inst, w):
    """Straight scipy rebuild of the relaxation bound pair for one scenario:
    objective x and constraint x range independently over the relaxed X,
    products handled by McCormick envelopes."""
    fs = inst.first
    sc = inst.scenarios[w]
    n, n2 = fs.n, sc.n2
    prods = [(i, j) for i in range(n) for j in range(n2) if abs(sc.G[i, j]) > 1e-12]
    ncols = 2 * n + n2 + len(prods)
    xo, xc, y0, w0 = 0, n, 2 * n, 2 * n + n2

    c = np.zeros(ncols)
    c[y0 : y0 + n2] = sc.q
    for k, (i, j) in enumerate(prods):
        c[w0 + k] = sc.G[i, j]

    A_ub, b_ub = [], []
    for blk in (xo, xc):
        for irow in range(fs.A.shape[0]):  # all fixture rows are <=
            row = np.zeros(ncols)
            row[blk : blk + n] = fs.A[irow]
            A_ub.append(row)
            b_ub.append(fs.b[irow])
    for irow in range(sc.m2):
        row = np.zeros(ncols)
        row[xc : xc + n] = sc.T[irow]
        row[y0 : y0 + n2] = sc.W[irow]
        A_ub.append(row)
        b_ub.append(sc.r[irow])
    for k, (i, j) in enumerate(prods):
        aL, aU = fs.lb[i], fs.ub[i]
        bL, bU = sc.ylb[j], sc.yub[j]
        for alpha, beta, ge in ((aL, bL, True), (aU, bU, True), (aU, bL, False), (aL, bU, False)):
            row = np.zeros(ncols)
            row[w0 + k] = 1.0
            row[y0 + j] -= alpha
            row[xo + i] -= beta
            rhs = -alpha * beta
            if ge:
                row, rhs = -row, -rhs
            A_ub.append(row)
            b_ub.append(rhs)

    bounds = (
        [(fs.lb[i], fs.ub[i]) for i in range(n)] * 2
        + [(sc.ylb[j], sc.yub[j]) for j in range(n2)]
        + [(None, None)] * len(prods)
    )
    hi = linprog(-c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs")
    lo = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs")
    assert hi.status == 0 and lo.status == 0
    return -hi.fun, lo.fun


def test_interval_sigma_matches_direct_lp_oracle():
    inst = seed7()
    sig = compute_sigma(inst, INTERVAL)
    spread = max(
        _interval_oracle(inst, w)[0] - _interval_oracle(inst, w)[1] for w in range(inst.nscen)
    )
    for i in inst.first.coupled:
        assert sig.values[i] == pytest.approx(spread, abs=1e-6, rel=1e-6)


def test_optimization_sigma_is_valid_and_no_larger_than_needed():
    inst = seed7()
    sig = compute_sigma(inst, OPTIMIZATION)
    assert np.all(sig.values >= -1e-12)
    rep = check_strong_duality(inst, sig, samples=8, tol=1e-6)
    assert rep.passed, [r.detail for r in rep.records if not r.passed]


def test_big_sigma_forces_copy_to_match():
    inst = seed7()
    sig = compute_sigma(inst, INTERVAL)
    big = user_sigma(inst, float(sig.values.max() + 10.0))
    for x in sample_x(inst.first, 8):
        for w in range(inst.nscen):
            _, _, z = solve_subproblem(inst, big, x, w)
            for i in inst.first.coupled:
                assert z[i] == pytest.approx(x[i], abs=1e-6)


def test_fix_z_identity():
    inst = seed7()
    sig = compute_sigma(inst, INTERVAL)
    for x in sample_x(inst.first, 6):
        for w in range(inst.nscen):
            val, _, z = solve_subproblem(inst, sig, x, w, fix_z=True)
            q = evaluate_recourse(inst, x, w)
            assert np.allclose(z, x)
            assert val == pytest.approx(q + float(sig.values @ x), abs=1e-6)


def test_subproblem_reduces_to_recourse_without_coupling():
    inst = _decoupled_instance()
    sig = user_sigma(inst, 0.0)
    for x in sample_x(inst.first, 8):
        val, _, _ = solve_subproblem(inst, sig, x, 0)
        assert val == pytest.approx(evaluate_recourse(inst, x, 0), abs=1e-8)


def test_cut_tight_at_generator_and_coefficient_identity():
    inst = seed7()
    sig = compute_sigma(inst, INTERVAL)
    x = sample_x(inst.first, 1)[1]
    sols = [solve_subproblem(inst, sig, x, w) for w in range(inst.nscen)]
    cut = build_cut(inst, sig, sols, 1)
    agg = sum(sc.p * sols[w][0] for w, sc in enumerate(inst.scenarios))
    assert cut.value(x) == pytest.approx(agg, abs=1e-7)
    coef = sum(
        sc.p * (sc.G @ sols[w][1] + 2.0 * sig.values * sols[w][2])
        for w, sc in enumerate(inst.scenarios)
    )
    assert np.allclose(cut.coef, coef, atol=1e-9)


def test_cut_validity_on_samples():
    inst = seed7()
    res = run(inst, tol=0.0)
    rep = check_cut_validity(inst, res, samples=8)
    assert rep.passed, [r.detail for r in rep.records if not r.passed]


def test_run_matches_brute_force_seed7():
    inst = seed7()
    xb, vb = brute_force_solve(inst)
    res = run(inst, tol=0.0)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(vb, abs=1e-6)
    assert objective_value(inst, res.x) == pytest.approx(vb, abs=1e-6)


def test_single_scenario_reduction():
    inst = _decoupled_instance(nscen=1)
    res = run(inst, tol=0.0)
    _, vb = brute_force_solve(inst)
    assert res.objective == pytest.approx(vb, abs=1e-8)


def test_fix_z_same_objective_seed7():
    inst = seed7()
    res = run(inst, tol=0.0)
    res_fz = run(inst, tol=0.0, fix_z=True)
    assert res_fz.objective == pytest.approx(res.objective, abs=1e-6)


def test_bounds_monotone_and_iteration_cap():
    inst = seed7()
    res = run(inst, tol=0.0)
    lbs = [l.lb for l in res.logs]
    ubs = [l.ub for l in res.logs]
    assert all(b2 >= b1 - 1e-9 for b1, b2 in zip(lbs, lbs[1:]))
    assert all(u2 <= u1 + 1e-9 for u1, u2 in zip(ubs, ubs[1:]))
    assert res.logs[-1].ub >= res.logs[-1].lb - 1e-7
    from btsp.model import enumerate_feasible_x

    assert res.iterations <= len(enumerate_feasible_x(inst.first)) + 1


def test_strong_duality_sigma_zero_negative_control():
    # sigma = 0 must break exactness on at least one coupled fixture
    broken = 0
    for seed in range(20):
        inst = random_minmax_instance(seed)
        rep = check_strong_duality(inst, user_sigma(inst, 0.0), samples=6)
        if not rep.passed:
            broken += 1
    assert broken >= 1


def test_threads_do_not_change_the_run():
    inst = seed7()
    a = run(inst, tol=0.0, threads=1)
    b = run(inst, tol=0.0, threads=4)
    assert a.objective == b.objective
    assert np.array_equal(a.x, b.x)
    assert [(l.lb, l.ub) for l in a.logs] == [(l.lb, l.ub) for l in b.logs]
