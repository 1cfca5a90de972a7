"""Data model for two-stage programs whose first stage enters both the
recourse objective (through x'G y) and the recourse constraints (through
T x), plus exact evaluation and a brute-force optimum oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .lp import EQ, GE, LE, INFEASIBLE, OPTIMAL, UNBOUNDED, LpModel, solve_lp
from .milp import MilpModel, solve_milp

MIN_MIN = "min-min"
MIN_MAX = "min-max"

BINARY = "B"
INTEGER = "I"
CONTINUOUS = "C"

_PROB_TOL = 1e-12
_BOUND_GUARD = 1e9
_ENUM_GUARD = 4096


class ModelError(Exception):
    pass


class RecourseInfeasible(ModelError):
    """Y(x, w) is empty: the compactness/feasibility assumption fails."""


class RecourseUnbounded(ModelError):
    pass


def _arr(v):
    return np.asarray(v, dtype=float)


@dataclass
class FirstStage:
    """First-stage system: cost c, rows A x (rel) b, kinds and bounds.

    ``coupled`` lists the variable indices that enter the recourse (either
    a nonzero G row or a nonzero T column somewhere); those components
    must be binary for the exact min-max method, and every component must
    be binary for the exact min-min method.
    """

    n: int
    c: np.ndarray
    A: np.ndarray
    rel: list
    b: np.ndarray
    kind: list
    lb: np.ndarray
    ub: np.ndarray
    coupled: list

    def __post_init__(self):
        self.c = _arr(self.c)
        self.A = _arr(self.A).reshape(-1, self.n)
        self.b = _arr(self.b)
        self.rel = list(self.rel)
        self.lb = _arr(self.lb)
        self.ub = _arr(self.ub)
        self.kind = list(self.kind)
        self.coupled = sorted(int(i) for i in self.coupled)
        for i, k in enumerate(self.kind):
            if k == BINARY:
                self.lb[i] = max(self.lb[i], 0.0)
                self.ub[i] = min(self.ub[i], 1.0)

    @property
    def binary_indices(self):
        return [i for i, k in enumerate(self.kind) if k == BINARY]

    def integer_mask(self):
        return np.array([k in (BINARY, INTEGER) for k in self.kind])


@dataclass
class Scenario:
    """One realization of the recourse data: W y (rel) r - T x, y in Y."""

    p: float
    q: np.ndarray
    G: np.ndarray  # n1 x n2, row i is the objective coupling of x_i
    T: np.ndarray  # m2 x n1
    W: np.ndarray  # m2 x n2
    rel: list
    r: np.ndarray
    ykind: list
    ylb: np.ndarray
    yub: np.ndarray

    def __post_init__(self):
        self.q = _arr(self.q)
        n2 = self.q.size
        self.G = _arr(self.G).reshape(-1, n2)
        self.W = _arr(self.W).reshape(-1, n2)
        self.T = _arr(self.T).reshape(self.W.shape[0], -1)
        self.r = _arr(self.r)
        self.rel = list(self.rel)
        self.ylb = _arr(self.ylb)
        self.yub = _arr(self.yub)
        self.ykind = list(self.ykind)

    @property
    def n2(self):
        return self.q.size

    @property
    def m2(self):
        return self.r.size

    def y_integer_mask(self):
        return np.array([k in (BINARY, INTEGER) for k in self.ykind])


@dataclass
class BtspInstance:
    first: FirstStage
    scenarios: list
    sense: str
    name: str = ""

    @property
    def nscen(self):
        return len(self.scenarios)

    def probabilities(self):
        return np.array([s.p for s in self.scenarios])


@dataclass
class ValidationIssue:
    code: str
    where: str
    message: str


def validate(inst: BtspInstance, engine=None) -> list:
    """Well-formedness report; empty list iff the instance is clean."""
    issues = []
    fs = inst.first
    ns = inst.nscen

    if inst.sense not in (MIN_MIN, MIN_MAX):
        issues.append(ValidationIssue("sense", "/sense", f"unknown sense {inst.sense!r}"))
    if ns == 0:
        issues.append(ValidationIssue("scenarios", "/scenarios", "no scenarios"))
        return issues

    psum = sum(s.p for s in inst.scenarios)
    if any(s.p < -_PROB_TOL for s in inst.scenarios):
        issues.append(ValidationIssue("prob-negative", "/scenarios", "negative probability"))
    if abs(psum - 1.0) > _PROB_TOL:
        issues.append(
            ValidationIssue("prob-sum", "/scenarios", f"probabilities sum to {psum!r}")
        )

    n2 = inst.scenarios[0].n2
    for w, sc in enumerate(inst.scenarios):
        where = f"/scenarios/{w}"
        if sc.n2 != n2:
            issues.append(ValidationIssue("dims", where, "inconsistent y dimension"))
        if sc.G.shape != (fs.n, sc.n2):
            issues.append(ValidationIssue("dims", where, "G shape mismatch"))
        if sc.T.shape != (sc.m2, fs.n):
            issues.append(ValidationIssue("dims", where, "T shape mismatch"))
        if len(sc.rel) != sc.m2:
            issues.append(ValidationIssue("dims", where, "relation count mismatch"))
        out = [i for i in range(fs.n) if i not in fs.coupled]
        if out:
            if np.any(np.abs(sc.G[out, :]) > 1e-12):
                issues.append(
                    ValidationIssue("coupling", where, "G row nonzero outside the coupled set")
                )
            if np.any(np.abs(sc.T[:, out]) > 1e-12):
                issues.append(
                    ValidationIssue("coupling", where, "T column nonzero outside the coupled set")
                )

    bad = [i for i in fs.coupled if i < 0 or i >= fs.n]
    if bad:
        issues.append(ValidationIssue("coupled-range", "/first_stage", f"indices {bad} out of range"))

    issues += _check_first_stage_region(fs)
    issues += _check_recourse_regions(inst)
    return issues


def assumption_issues(inst: BtspInstance) -> list:
    """Binary-structure preconditions of the exact decomposition methods.

    Kept out of :func:`validate` on purpose: an instance with a continuous
    first stage is still well formed (it can be evaluated pointwise), it
    just is not solvable exactly by the cutting-plane drivers.
    """
    fs = inst.first
    issues = []
    if inst.sense == MIN_MAX:
        nb = [i for i in fs.coupled if 0 <= i < fs.n and fs.kind[i] != BINARY]
        if nb:
            issues.append(
                ValidationIssue(
                    "minmax-binary", "/first_stage", f"coupled variables {nb} are not binary"
                )
            )
    else:
        nb = [i for i, k in enumerate(fs.kind) if k != BINARY]
        if nb:
            issues.append(
                ValidationIssue("minmin-binary", "/first_stage", f"variables {nb} are not binary")
            )
    return issues


def _check_first_stage_region(fs):
    issues = []
    feas = solve_lp(
        LpModel(np.zeros(fs.n), fs.A, fs.rel, fs.b, fs.lb, fs.ub, "min")
    )
    if feas.status == INFEASIBLE:
        issues.append(ValidationIssue("X-empty", "/first_stage", "relaxation of X is empty"))
        return issues
    for j in range(fs.n):
        if np.isfinite(fs.lb[j]) and np.isfinite(fs.ub[j]):
            continue
        c = np.zeros(fs.n)
        c[j] = 1.0
        hi = solve_lp(LpModel(c, fs.A, fs.rel, fs.b, fs.lb, fs.ub, "max"))
        lo = solve_lp(LpModel(c, fs.A, fs.rel, fs.b, fs.lb, fs.ub, "min"))
        if (
            hi.status == UNBOUNDED
            or lo.status == UNBOUNDED
            or (hi.status == OPTIMAL and abs(hi.obj) > _BOUND_GUARD)
            or (lo.status == OPTIMAL and abs(lo.obj) > _BOUND_GUARD)
        ):
            issues.append(
                ValidationIssue("X-unbounded", "/first_stage", f"variable {j} exceeds the guard")
            )
    return issues


def _check_recourse_regions(inst):
    """Feasibility/boundedness of Y(x, w): per lattice point when X is
    small, otherwise on a joint relaxation over (x, y)."""
    issues = []
    fs = inst.first
    try:
        points = enumerate_feasible_x(fs, guard=256)
    except ModelError:
        points = None
    for w, sc in enumerate(inst.scenarios):
        where = f"/scenarios/{w}"
        if np.any(~np.isfinite(sc.ylb)) or np.any(~np.isfinite(sc.yub)):
            issues.append(ValidationIssue("Y-unbounded", where, "unbounded y box"))
            continue
        if points is not None:
            for x in points:
                m = LpModel(
                    np.zeros(sc.n2), sc.W, sc.rel, sc.r - sc.T @ x, sc.ylb, sc.yub, "min"
                )
                if solve_lp(m).status == INFEASIBLE:
                    issues.append(
                        ValidationIssue(
                            "Y-empty", where, f"Y(x, w) empty at x={np.round(x, 6).tolist()}"
                        )
                    )
                    break
        else:
            n, n2 = fs.n, sc.n2
            A = np.zeros((fs.A.shape[0] + sc.m2, n + n2))
            A[: fs.A.shape[0], :n] = fs.A
            A[fs.A.shape[0] :, :n] = sc.T
            A[fs.A.shape[0] :, n:] = sc.W
            m = LpModel(
                np.zeros(n + n2),
                A,
                fs.rel + sc.rel,
                np.concatenate([fs.b, sc.r]),
                np.concatenate([fs.lb, sc.ylb]),
                np.concatenate([fs.ub, sc.yub]),
                "min",
            )
            if solve_lp(m).status == INFEASIBLE:
                issues.append(ValidationIssue("Y-empty", where, "joint relaxation infeasible"))
    return issues


def recourse_model(inst, x, w) -> MilpModel:
    sc = inst.scenarios[w]
    lp = LpModel(
        sc.q + sc.G.T @ _arr(x),
        sc.W,
        sc.rel,
        sc.r - sc.T @ _arr(x),
        sc.ylb,
        sc.yub,
        "min" if inst.sense == MIN_MIN else "max",
    )
    return MilpModel(lp, sc.y_integer_mask())


def evaluate_recourse(inst, x, w, engine=None, return_y=False):
    """Exact Q(x, w): the recourse MILP solved with x substituted in."""
    from .backend import default_engine

    eng = engine or default_engine()
    sol = eng.solve_milp(recourse_model(inst, x, w))
    if sol.status == INFEASIBLE:
        raise RecourseInfeasible(f"recourse infeasible at scenario {w}")
    if sol.status == UNBOUNDED:
        raise RecourseUnbounded(f"recourse unbounded at scenario {w}")
    if sol.status != OPTIMAL:
        raise ModelError(f"recourse solve ended with status {sol.status}")
    return (sol.obj, sol.x) if return_y else sol.obj


def expected_recourse(inst, x, engine=None):
    return sum(s.p * evaluate_recourse(inst, x, w, engine) for w, s in enumerate(inst.scenarios))


def objective_value(inst, x, engine=None):
    return float(inst.first.c @ _arr(x)) + expected_recourse(inst, x, engine)


def enumerate_feasible_x(fs: FirstStage, guard=_ENUM_GUARD):
    """All lattice points of X in lexicographic order."""
    ranges = []
    total = 1
    for j in range(fs.n):
        if fs.kind[j] == CONTINUOUS:
            raise ModelError("cannot enumerate a continuous first stage")
        lo = int(np.ceil(fs.lb[j] - 1e-9))
        hi = int(np.floor(fs.ub[j] + 1e-9))
        if hi < lo:
            return []
        ranges.append(range(lo, hi + 1))
        total *= hi - lo + 1
        if total > guard:
            raise ModelError(f"lattice has more than {guard} points")
    points = []
    for tup in itertools.product(*ranges):
        x = np.array(tup, dtype=float)
        if _x_feasible(fs, x):
            points.append(x)
    return points


def _x_feasible(fs, x, tol=1e-9):
    vals = fs.A @ x
    for i, rel in enumerate(fs.rel):
        d = vals[i] - fs.b[i]
        if rel == LE and d > tol:
            return False
        if rel == GE and d < -tol:
            return False
        if rel == EQ and abs(d) > tol:
            return False
    return True


def brute_force_solve(inst, engine=None, guard=_ENUM_GUARD):
    """Enumerate X and pick the best objective; lexicographically smallest
    x wins ties.  This is the independent oracle the solvers are checked
    against, so it must stay decomposition-free."""
    points = enumerate_feasible_x(inst.first, guard=guard)
    if not points:
        raise ModelError("X has no feasible lattice point")
    best_x, best_val = None, np.inf
    for x in points:
        val = objective_value(inst, x, engine)
        if val < best_val - 1e-12:
            best_x, best_val = x, val
    return best_x, best_val


# ---------------------------------------------------------------------------
# CVaR-based decision-dependent source and its min-max transform


@dataclass
class CvarScenario:
    q: np.ndarray
    T: np.ndarray
    W: np.ndarray
    rel: list
    r: np.ndarray

    def __post_init__(self):
        self.q = _arr(self.q)
        self.W = _arr(self.W).reshape(-1, self.q.size)
        self.T = _arr(self.T).reshape(self.W.shape[0], -1)
        self.r = _arr(self.r)
        self.rel = list(self.rel)


@dataclass
class CvarSource:
    """Risk-averse single-parameterized source: per-scenario continuous
    recourse (q, T, W, r), affine scenario probabilities
    p(x, w) = a0(w) + a(w)'x, and a confidence level alpha."""

    first: FirstStage
    scenarios: list
    a0: np.ndarray
    a: np.ndarray  # nscen x n1
    alpha: float
    name: str = ""

    def __post_init__(self):
        self.a0 = _arr(self.a0)
        self.a = _arr(self.a).reshape(len(self.scenarios), self.first.n)
        if not 0.0 <= self.alpha < 1.0:
            raise ModelError("alpha must lie in [0, 1)")

    def prob(self, x):
        return self.a0 + self.a @ _arr(x)

    def check_probabilities(self, guard=_ENUM_GUARD):
        """Vertex check: p(x, .) is a distribution at every lattice x."""
        bad = []
        for x in enumerate_feasible_x(self.first, guard=guard):
            p = self.prob(x)
            if np.any(p < -1e-9) or np.any(p > 1 + 1e-9) or abs(p.sum() - 1) > 1e-9:
                bad.append(x)
        return bad


def cvar_to_btsp(src: CvarSource) -> BtspInstance:
    """Rewrite min f(x) + CVaR_alpha(Q^s(x, .), p(x)) as a one-scenario
    min-max instance over joint variables (tau(w), gamma(w))."""
    fs = src.first
    nscen = len(src.scenarios)
    bad = src.check_probabilities()
    if bad:
        raise ModelError(f"p(x, .) is not a distribution at x={bad[0].tolist()}")

    inv = 1.0 / (1.0 - src.alpha)
    tau_off = []
    ncols = 0
    for sc in src.scenarios:
        tau_off.append(ncols)
        ncols += sc.r.size + 1  # tau block then gamma
    gamma_col = [tau_off[w] + src.scenarios[w].r.size for w in range(nscen)]

    q = np.zeros(ncols)
    G = np.zeros((fs.n, ncols))
    ylb = np.zeros(ncols)
    yub = np.empty(ncols)
    ykind = [CONTINUOUS] * ncols
    rows = []  # (wrow, trow, rel, rhs)

    for w, sc in enumerate(src.scenarios):
        m2 = sc.r.size
        cols = slice(tau_off[w], tau_off[w] + m2)
        q[cols] = inv * sc.r
        G[:, cols] = -inv * sc.T.T
        yub[cols] = _dual_box(sc)
        yub[gamma_col[w]] = 1.0
        # gamma(w) <= p(x, w) = a0 + a'x, so the T part carries -a
        wrow = np.zeros(ncols)
        wrow[gamma_col[w]] = 1.0
        rows.append((wrow, -src.a[w], LE, src.a0[w]))
        # W' tau - q gamma <= 0, columnwise over the source's y space
        WT = sc.W.T  # n2 x m2
        for jj in range(sc.q.size):
            wrow = np.zeros(ncols)
            wrow[cols] = WT[jj]
            wrow[gamma_col[w]] = -sc.q[jj]
            rows.append((wrow, np.zeros(fs.n), LE, 0.0))
    wrow = np.zeros(ncols)
    wrow[gamma_col] = 1.0
    rows.append((wrow, np.zeros(fs.n), EQ, 1.0 - src.alpha))

    W = np.array([r[0] for r in rows])
    T = np.array([r[1] for r in rows])
    rel = [r[2] for r in rows]
    r = np.array([r[3] for r in rows])

    coupled = sorted(
        set(fs.coupled)
        | {i for i in range(fs.n) if np.any(np.abs(G[i]) > 1e-12) or np.any(np.abs(T[:, i]) > 1e-12)}
    )
    first = FirstStage(
        fs.n, fs.c, fs.A, fs.rel, fs.b, list(fs.kind), fs.lb.copy(), fs.ub.copy(), coupled
    )
    scen = Scenario(1.0, q, G, T, W, rel, r, ykind, ylb, yub)
    return BtspInstance(first, [scen], MIN_MAX, name=src.name or "cvar")


def _dual_box(sc: CvarScenario):
    """Coordinatewise cap on tau = gamma * pi over the scaled dual cone."""
    m2 = sc.r.size
    caps = np.empty(m2)
    for k in range(m2):
        c = np.zeros(m2)
        c[k] = 1.0
        sol = solve_lp(
            LpModel(c, sc.W.T, [LE] * sc.q.size, sc.q, np.zeros(m2), np.full(m2, np.inf), "max")
        )
        if sol.status == UNBOUNDED or (sol.status == OPTIMAL and sol.obj > _BOUND_GUARD):
            raise ModelError(
                "dual multipliers of the source recourse are unbounded; "
                "tighten the second-stage rows"
            )
        if sol.status != OPTIMAL:
            raise ModelError(f"dual box solve failed with status {sol.status}")
        caps[k] = max(sol.obj, 0.0) + 1.0
    return caps
