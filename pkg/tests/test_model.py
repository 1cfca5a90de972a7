import numpy as np
import pytest

from btsp.lp import EQ, GE, LE
from btsp.model import (
    MIN_MAX,
    MIN_MIN,
    BINARY,
    CONTINUOUS,
    BtspInstance,
    CvarScenario,
    CvarSource,
    FirstStage,
    ModelError,
    Scenario,
    brute_force_solve,
    cvar_to_btsp,
    enumerate_feasible_x,
    evaluate_recourse,
    expected_recourse,
    objective_value,
    validate,
)

OMEGAS = (1.0 / 3.0, 2.0 / 3.0, 1.0)


def example1(kind=CONTINUOUS):
    """Two-piece recourse min (1+x)y1 + (1+3x)y2, y1 >= x-w, y2 >= w-x."""
    first = FirstStage(
        n=1, c=[0.0], A=np.zeros((0, 1)), rel=[], b=[], kind=[kind],
        lb=[0.0], ub=[1.0], coupled=[0],
    )
    scen = []
    for w in OMEGAS:
        scen.append(
            Scenario(
                p=1.0 / 3.0,
                q=[1.0, 1.0],
                G=[[1.0, 3.0]],
                T=[[-1.0], [1.0]],
                W=[[1.0, 0.0], [0.0, 1.0]],
                rel=[GE, GE],
                r=[-w, w],
                ykind=[CONTINUOUS, CONTINUOUS],
                ylb=[0.0, 0.0],
                yub=[10.0, 10.0],
            )
        )
    return BtspInstance(first, scen, MIN_MIN, name="example1")


def closed_form(x, w):
    return (1 + x) * max(x - w, 0.0) + (1 + 3 * x) * max(w - x, 0.0)


def test_example1_validates_clean():
    assert validate(example1()) == []


def test_recourse_matches_closed_form():
    inst = example1()
    assert evaluate_recourse(inst, [0.0], 0) == pytest.approx(closed_form(0, OMEGAS[0]), abs=1e-9)
    assert evaluate_recourse(inst, [0.0], 2) == pytest.approx(1.0, abs=1e-9)
    assert evaluate_recourse(inst, [1.0 / 6.0], 0) == pytest.approx(0.25, abs=1e-9)
    rng = np.random.default_rng(3)
    for x in rng.uniform(0, 1, size=6):
        for w in range(3):
            assert evaluate_recourse(inst, [x], w) == pytest.approx(
                closed_form(x, OMEGAS[w]), abs=1e-9
            )


def test_expected_recourse_figure_values():
    inst = example1()
    expect = {0.0: 2 / 3, 1 / 6: 3 / 4, 1 / 3: 2 / 3, 2 / 3: 14 / 27, 1.0: 2 / 3}
    for x, v in expect.items():
        assert expected_recourse(inst, [x]) == pytest.approx(v, abs=1e-9)
    # nonconvexity witness: the chord at {0, 1/3} lies below the middle
    mid = expected_recourse(inst, [1 / 6])
    chord = 0.5 * (expected_recourse(inst, [0.0]) + expected_recourse(inst, [1 / 3]))
    assert mid > chord + 1e-3


def test_zero_objective_recourse():
    inst = example1()
    for sc in inst.scenarios:
        sc.q = np.zeros(2)
        sc.G = np.zeros((1, 2))
    for w in range(3):
        assert evaluate_recourse(inst, [0.3], w) == pytest.approx(0.0, abs=1e-9)


def test_brute_force_binary_example():
    inst = example1(kind=BINARY)
    x, val = brute_force_solve(inst)
    # E[Q(0)] = E[Q(1)] = 2/3: the tie breaks to the smaller point
    assert val == pytest.approx(2 / 3, abs=1e-9)
    assert np.allclose(x, [0.0])


def test_brute_force_singleton():
    first = FirstStage(
        n=2, c=[1.0, 1.0], A=[[1, 0], [0, 1]], rel=[EQ, EQ], b=[1, 0],
        kind=[BINARY, BINARY], lb=[0, 0], ub=[1, 1], coupled=[],
    )
    sc = Scenario(1.0, [0.0], np.zeros((2, 1)), np.zeros((1, 2)), [[1.0]], [LE], [5.0],
                  [CONTINUOUS], [0.0], [9.0])
    inst = BtspInstance(first, [sc], MIN_MIN)
    x, val = brute_force_solve(inst)
    assert np.allclose(x, [1, 0])
    assert val == pytest.approx(1.0)


def test_brute_force_guard():
    n = 13
    first = FirstStage(
        n=n, c=np.zeros(n), A=np.zeros((0, n)), rel=[], b=[],
        kind=[BINARY] * n, lb=np.zeros(n), ub=np.ones(n), coupled=[],
    )
    sc = Scenario(1.0, [0.0], np.zeros((n, 1)), np.zeros((1, n)), [[1.0]], [LE], [5.0],
                  [CONTINUOUS], [0.0], [9.0])
    inst = BtspInstance(first, [sc], MIN_MIN)
    with pytest.raises(ModelError, match="lattice"):
        brute_force_solve(inst)


def test_validate_flags_probability_sum():
    inst = example1()
    inst.scenarios[0].p = 1.0 / 3.0 - 1e-3
    codes = [i.code for i in validate(inst)]
    assert "prob-sum" in codes


def test_validate_flags_coupling():
    inst = example1()
    inst.first.coupled = []
    codes = [i.code for i in validate(inst)]
    assert "coupling" in codes


def test_validate_flags_unbounded_y_box():
    inst = example1()
    inst.scenarios[0].yub = np.array([np.inf, 10.0])
    codes = [i.code for i in validate(inst)]
    assert "Y-unbounded" in codes


def test_enumerate_lexicographic_order():
    first = FirstStage(
        n=2, c=[0, 0], A=[[1, 1]], rel=[LE], b=[1], kind=[BINARY, BINARY],
        lb=[0, 0], ub=[1, 1], coupled=[],
    )
    pts = enumerate_feasible_x(first)
    assert [p.tolist() for p in pts] == [[0, 0], [0, 1], [1, 0]]


# ---------------------------------------------------------------------------
# CVaR source transform


def _cvar_source(alpha, a0, a, nx=1):
    """One-variable sources whose recourse is y >= d - x with cost y."""
    first = FirstStage(
        n=nx, c=[0.0] * nx, A=np.zeros((0, nx)), rel=[], b=[],
        kind=[BINARY] * nx, lb=[0.0] * nx, ub=[1.0] * nx, coupled=list(range(nx)),
    )
    scen = [
        CvarScenario(q=[1.0], T=[[1.0] + [0.0] * (nx - 1)], W=[[1.0]], rel=[GE], r=[d])
        for d in (1.0, 2.0)
    ]
    return CvarSource(first, scen, a0=a0, a=a, alpha=alpha)


def _cvar_by_definition(src, x):
    """Grid/KKT-free oracle: piecewise evaluation of the eta-minimization."""
    p = src.prob(x)
    vals = []
    for sc in src.scenarios:
        # closed-form recourse of the toy: y = max(d - x1, 0), cost y
        vals.append(max(sc.r[0] - x[0], 0.0))
    vals = np.array(vals)
    best = np.inf
    for eta in np.concatenate([vals, [vals.min() - 1, vals.max() + 1]]):
        v = eta + (p @ np.maximum(vals - eta, 0.0)) / (1 - src.alpha)
        best = min(best, v)
    return best


def test_cvar_alpha_zero_is_expectation():
    first = FirstStage(
        n=1, c=[0.0], A=np.zeros((0, 1)), rel=[], b=[], kind=[BINARY],
        lb=[0.0], ub=[1.0], coupled=[0],
    )
    scen = [CvarScenario(q=[1.0], T=[[1.0]], W=[[1.0]], rel=[GE], r=[2.0])]
    src = CvarSource(first, scen, a0=[1.0], a=np.zeros((1, 1)), alpha=0.0)
    inst = cvar_to_btsp(src)
    assert inst.sense == MIN_MAX
    for xv in (0.0, 1.0):
        want = max(2.0 - xv, 0.0)
        assert objective_value(inst, [xv]) == pytest.approx(want, abs=1e-8)


def test_cvar_half_constant_p_picks_worst_scenario():
    src = _cvar_source(0.5, a0=[0.5, 0.5], a=np.zeros((2, 1)))
    inst = cvar_to_btsp(src)
    for xv in (0.0, 1.0):
        # gamma concentrates its 0.5 budget on the larger loss
        want = _cvar_by_definition(src, [xv])
        assert objective_value(inst, [xv]) == pytest.approx(want, abs=1e-8)


def test_cvar_affine_probability_matches_definition():
    src = _cvar_source(0.3, a0=[0.7, 0.3], a=[[-0.4], [0.4]])
    assert src.check_probabilities() == []
    inst = cvar_to_btsp(src)
    # built-instance optimum over x equals the definition-level optimum
    xs = enumerate_feasible_x(inst.first)
    want = min(_cvar_by_definition(src, x) for x in xs)
    _, got = brute_force_solve(inst)
    assert got == pytest.approx(want, abs=1e-8)


def test_cvar_monotone_in_alpha():
    vals = []
    for alpha in (0.1, 0.4, 0.7):
        src = _cvar_source(alpha, a0=[0.5, 0.5], a=np.zeros((2, 1)))
        inst = cvar_to_btsp(src)
        vals.append(objective_value(inst, [0.0]))
    assert vals[0] <= vals[1] + 1e-9 <= vals[2] + 2e-9


def test_cvar_rejects_bad_probability_map():
    src = _cvar_source(0.5, a0=[0.9, 0.3], a=np.zeros((2, 1)))
    with pytest.raises(ModelError, match="distribution"):
        cvar_to_btsp(src)
