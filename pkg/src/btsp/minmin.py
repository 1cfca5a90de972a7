"""Exact cutting-plane method for the min-min problem.

Each scenario's lifted (x, y) feasible set is convexified on the fly with
parametric Gomory cuts; dualizing the convexified recourse turns the
problem into the min-max shape, and the same multiplier trick applies.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cuts import (
    OPTIMAL_RUN,
    TIME_LIMIT_RUN,
    IterationLog,
    OptimalityCut,
    RunResult,
    digest_solutions,
    gap_closed,
    laporte_cut,
    relative_gap,
    solve_master,
)
from .gomory import NoCut, gomory_cut
from .lp import EQ, GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED, LpModel, solve_lp
from .milp import MilpModel
from .minmax import SigmaError, SigmaVector, _interval_bounds
from .model import (
    MIN_MIN,
    ModelError,
    assumption_issues,
    evaluate_recourse,
)

PI_BOX = 1e6
DUAL_DERIVED = "dual-interval"
_ORACLE_ROUND_CAP = 50


class ConvexificationError(ModelError):
    pass


@dataclass
class ConvexifiedScenario:
    """Working all->= row system T^l x + W^l y >= r^l for one scenario.

    Rows 0..base-1 restate the scenario data (equalities as +- pairs) plus
    the y box; rows from ``base`` on are appended parametric inequalities,
    each valid for the lifted integer hull.
    """

    T: np.ndarray
    W: np.ndarray
    r: np.ndarray
    base: int
    appended: list = field(default_factory=list)
    oracle_rounds: int = 0
    fallback: bool = False

    @property
    def m(self):
        return self.r.size

    def append_row(self, t_part, w_part, rhs, iteration):
        self.T = np.vstack([self.T, t_part])
        self.W = np.vstack([self.W, w_part])
        self.r = np.append(self.r, rhs)
        self.appended.append((iteration, t_part.copy(), w_part.copy(), float(rhs)))


def convexify(scenario, n1) -> ConvexifiedScenario:
    """Initial system: scenario rows in >= form plus the y box as rows, so
    the LP dual ranges over every structural constraint."""
    Trows, Wrows, rr = [], [], []
    for k in range(scenario.m2):
        t, w, rhs = scenario.T[k], scenario.W[k], scenario.r[k]
        if scenario.rel[k] in (GE, EQ):
            Trows.append(t.copy())
            Wrows.append(w.copy())
            rr.append(rhs)
        if scenario.rel[k] in (LE, EQ):
            Trows.append(-t)
            Wrows.append(-w)
            rr.append(-rhs)
    n2 = scenario.n2
    for j in range(n2):
        if not np.isfinite(scenario.yub[j]):
            raise ConvexificationError("convexification needs a finite y box")
        row = np.zeros(n2)
        row[j] = -1.0
        Trows.append(np.zeros(n1))
        Wrows.append(row)
        rr.append(-scenario.yub[j])
        if scenario.ylb[j] > 0:
            Trows.append(np.zeros(n1))
            Wrows.append(-row)
            rr.append(scenario.ylb[j])
    T = np.array(Trows)
    W = np.array(Wrows)
    r = np.array(rr, dtype=float)
    return ConvexifiedScenario(T=T, W=W, r=r, base=r.size)


def _require_minmin(inst):
    if inst.sense != MIN_MIN:
        raise ModelError("this driver handles min-min instances")
    issues = assumption_issues(inst)
    if issues:
        raise ModelError("; ".join(i.message for i in issues))


def solve_primal_subproblem(conv, scenario, x, engine=None):
    """LP relaxation on the working system at fixed x."""
    from .backend import default_engine

    eng = engine or default_engine()
    x = np.asarray(x, dtype=float)
    n2 = scenario.n2
    lp = LpModel(
        scenario.q + scenario.G.T @ x,
        conv.W,
        [GE] * conv.m,
        conv.r - conv.T @ x,
        np.zeros(n2),
        np.full(n2, np.inf),
        "min",
    )
    sol = eng.solve_lp(lp)
    if sol.status == INFEASIBLE:
        raise ConvexificationError(
            "primal subproblem infeasible: an appended row cut into the hull"
        )
    if sol.status != OPTIMAL:
        raise ModelError(f"primal subproblem status {sol.status}")
    return sol.obj, sol.x.copy()


def _is_integral(scenario, y, tol=1e-6):
    mask = scenario.y_integer_mask()
    return bool(np.all(np.abs(y - np.round(y))[mask] <= tol))


def oracle_step(conv, scenario, first, x, engine=None):
    """One round of the cut-generating oracle at x.

    Solves the lifted LP with the x columns pinned to the (binary) point,
    reads a Gomory cut off the most fractional integer y row against the
    original 0/1 bounds, and appends it as a new parametric row.  Returns
    (y, integral, appended) for the re-solved relaxation.
    """
    from .backend import default_engine

    eng = engine or default_engine()
    x = np.asarray(x, dtype=float)
    n1, n2 = first.n, scenario.n2
    ncols = n1 + n2
    c = np.concatenate([np.zeros(n1), scenario.q + scenario.G.T @ x])
    A = np.hstack([conv.T, conv.W])
    fixed = LpModel(
        c, A, [GE] * conv.m, conv.r,
        np.concatenate([x, np.zeros(n2)]),
        np.concatenate([x, np.full(n2, np.inf)]),
        "min",
    )
    sol = eng.solve_lp(fixed)
    if sol.status != OPTIMAL:
        raise ConvexificationError(f"lifted oracle LP status {sol.status}")
    y = sol.x[n1:].copy()
    if _is_integral(scenario, y):
        return y, True, False

    # bounds for the cut derivation are the true integer-hull bounds
    hull = LpModel(
        c, A, [GE] * conv.m, conv.r,
        np.concatenate([first.lb, np.zeros(n2)]),
        np.concatenate([first.ub, np.full(n2, np.inf)]),
        "min",
    )
    mask = scenario.y_integer_mask()
    frac = np.where(mask, np.abs(y - np.round(y)), 0.0)
    order = sorted(
        (j for j in range(n2) if frac[j] > 1e-6),
        key=lambda j: (-(0.5 - abs(frac[j] - 0.5)), j),
    )
    cut = None
    for j in order:
        try:
            cut = gomory_cut(hull, sol, n1 + int(j))
            break
        except NoCut:
            continue
    if cut is None:
        raise NoCut("no fractional basic integer row yields a cut")
    conv.append_row(cut.coeffs[:n1], cut.coeffs[n1:], cut.rhs, conv.oracle_rounds)
    return y, False, True


def solve_dual_subproblem(conv, scenario, first, sigma, x, pi_box=PI_BOX, engine=None):
    """Reformulated dual at x: max pi'(r^l - T^l x) + sum sigma_i(2x_i-1) z_i
    over W^l' pi - G' z <= q, z in X, pi >= 0 (boxed for boundedness)."""
    from .backend import default_engine

    eng = engine or default_engine()
    x = np.asarray(x, dtype=float)
    n1, n2, m = first.n, scenario.n2, conv.m
    ncols = m + n1
    c = np.concatenate([conv.r - conv.T @ x, sigma.values * (2.0 * x - 1.0)])

    rows, rel, rhs = [], [], []
    WT = conv.W.T  # n2 x m
    for j in range(n2):
        row = np.zeros(ncols)
        row[:m] = WT[j]
        row[m:] = -scenario.G[:, j]
        rows.append(row)
        rel.append(LE)
        rhs.append(scenario.q[j])
    for irow in range(first.A.shape[0]):
        row = np.zeros(ncols)
        row[m:] = first.A[irow]
        rows.append(row)
        rel.append(first.rel[irow])
        rhs.append(first.b[irow])

    lp = LpModel(
        c, np.array(rows), rel, np.array(rhs, dtype=float),
        np.concatenate([np.zeros(m), first.lb]),
        np.concatenate([np.full(m, pi_box), first.ub]),
        "max",
    )
    integer = np.concatenate([np.zeros(m, dtype=bool), first.integer_mask()])
    sol = eng.solve_milp(MilpModel(lp, integer))
    if sol.status == UNBOUNDED:
        raise SigmaError("dual subproblem unbounded: sigma too small or rows missing")
    if sol.status != OPTIMAL:
        raise ModelError(f"dual subproblem status {sol.status}")
    pi = sol.x[:m].copy()
    z = sol.x[m:].copy()
    return sol.obj, pi, z


def compute_sigma_minmin(inst, pi_box=PI_BOX, engine=None) -> SigmaVector:
    """Interval multipliers for the dualized recourse: per-coordinate caps
    on the dual cone feed LP bounds on the dual objective range."""
    from .backend import default_engine

    eng = engine or default_engine()
    _require_minmin(inst)
    fs = inst.first
    vals = np.zeros(fs.n)
    if not fs.coupled:
        return SigmaVector(vals, DUAL_DERIVED)
    spread = 0.0
    for w, sc in enumerate(inst.scenarios):
        conv = convexify(sc, fs.n)
        m = conv.m
        # q + G'z maximized coordinatewise over the x box
        gmax = sc.q + np.array(
            [
                sum(max(sc.G[i, j] * fs.lb[i], sc.G[i, j] * fs.ub[i]) for i in range(fs.n))
                for j in range(sc.n2)
            ]
        )
        caps = np.empty(m)
        for k in range(m):
            c = np.zeros(m)
            c[k] = 1.0
            sol = eng.solve_lp(
                LpModel(c, conv.W.T, [LE] * sc.n2, gmax, np.zeros(m), np.full(m, pi_box), "max")
            )
            if sol.status != OPTIMAL:
                raise SigmaError(f"dual cap LP status {sol.status}")
            caps[k] = min(max(sol.obj, 0.0), pi_box)
        # objective coefficient range of (r - T x) over the x box
        tpos = np.maximum(conv.T, 0.0) @ fs.ub + np.minimum(conv.T, 0.0) @ fs.lb
        tneg = np.minimum(conv.T, 0.0) @ fs.ub + np.maximum(conv.T, 0.0) @ fs.lb
        vhi = conv.r - tneg
        vlo = conv.r - tpos
        hi = _dual_range_lp(eng, conv, sc, gmax, caps, vhi, "max")
        lo = _dual_range_lp(eng, conv, sc, gmax, caps, vlo, "min")
        spread = max(spread, hi - lo)
    vals[fs.coupled] = spread
    return SigmaVector(vals, DUAL_DERIVED)


def _dual_range_lp(eng, conv, sc, gmax, caps, coef, sense):
    sol = eng.solve_lp(
        LpModel(coef, conv.W.T, [LE] * sc.n2, gmax, np.zeros(conv.m), caps, sense)
    )
    if sol.status != OPTIMAL:
        raise SigmaError(f"dual range LP status {sol.status}")
    return sol.obj


def _map_scenarios(fn, nscen, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(nscen)))
    return [fn(w) for w in range(nscen)]


def run(
    inst,
    sigma=None,
    tol=1e-4,
    time_limit=3600.0,
    threads=1,
    engine=None,
    max_iterations=None,
    pi_box=PI_BOX,
) -> RunResult:
    """Primal relaxations, one oracle cut per fractional scenario, dual
    subproblems, then the master; the upper bound moves only on iterations
    whose relaxations all came out integral."""
    _require_minmin(inst)
    if sigma is None:
        sigma = compute_sigma_minmin(inst, pi_box, engine)
    fs = inst.first
    sig = sigma.values
    offset = -sig
    t0 = time.monotonic()
    deadline = t0 + time_limit if time_limit else None

    convs = [convexify(sc, fs.n) for sc in inst.scenarios]
    x_cur, _, _ = solve_master(fs, offset, [], include_theta=False, engine=engine)
    lb, ub = -np.inf, np.inf
    x_best = x_cur.copy()
    cuts = []
    logs = []
    status = OPTIMAL_RUN
    fallback_bound = None
    it = 0
    while True:
        it += 1

        def primal_stage(w):
            conv, sc = convs[w], inst.scenarios[w]
            if conv.fallback:
                exact = evaluate_recourse(inst, x_cur, w, engine)
                return exact, True, exact
            val, y = solve_primal_subproblem(conv, sc, x_cur, engine)
            if _is_integral(sc, y):
                return val, True, val
            if conv.oracle_rounds >= _ORACLE_ROUND_CAP:
                conv.fallback = True
                exact = evaluate_recourse(inst, x_cur, w, engine)
                return exact, True, exact
            conv.oracle_rounds += 1
            try:
                _, integral, _ = oracle_step(conv, sc, fs, x_cur, engine)
            except NoCut:
                conv.fallback = True
                exact = evaluate_recourse(inst, x_cur, w, engine)
                return exact, True, exact
            return val, False, None

        primal = _map_scenarios(primal_stage, inst.nscen, threads)
        duals = _map_scenarios(
            lambda w: solve_dual_subproblem(
                convs[w], inst.scenarios[w], fs, sigma, x_cur, pi_box, engine
            ),
            inst.nscen,
            threads,
        )

        exact_iteration = all(p[1] for p in primal)
        psi = float(fs.c @ x_cur) - float(sig @ x_cur) + sum(
            sc.p * duals[w][0] for w, sc in enumerate(inst.scenarios)
        )
        if exact_iteration:
            # dual value must collapse to Q + sigma'x scenario by scenario
            for w, sc in enumerate(inst.scenarios):
                q_exact = primal[w][2]
                gap = duals[w][0] - float(sig @ x_cur) - q_exact
                if convs[w].fallback:
                    continue  # dual may lag the exact value on frozen systems
                if abs(gap) > 1e-5 * (1.0 + abs(q_exact)):
                    raise SigmaError(
                        f"scenario {w}: reformulated dual misses the exact recourse "
                        f"by {gap:.3e}; sigma is too small for this instance"
                    )
            phi = float(fs.c @ x_cur) + sum(
                sc.p * primal[w][2] for w, sc in enumerate(inst.scenarios)
            )
            if phi < ub:
                ub = phi
                x_best = x_cur.copy()

        cuts.append(_dual_cut(inst, sigma, convs, duals, it))
        if any(conv.fallback for conv in convs) and exact_iteration:
            if fallback_bound is None:
                fallback_bound = _global_theta_lb(inst, sigma, engine)
            s_val = sum(sc.p * primal[w][2] for w, sc in enumerate(inst.scenarios)) + float(
                sig @ x_cur
            )
            cuts.append(laporte_cut(x_cur, s_val, fallback_bound, it))

        x_cur, theta, master_val = solve_master(fs, offset, cuts, engine=engine)
        lb = max(lb, master_val)
        logs.append(
            IterationLog(it, lb, ub, relative_gap(lb, ub), time.monotonic() - t0, len(cuts), x_cur.copy())
        )
        if gap_closed(lb, ub, tol):
            break
        if deadline is not None and time.monotonic() > deadline:
            status = TIME_LIMIT_RUN
            break
        if max_iterations is not None and it >= max_iterations:
            status = TIME_LIMIT_RUN
            break
    return RunResult(
        x=x_best,
        objective=ub,
        status=status,
        logs=logs,
        cuts=cuts,
        extras={
            "sigma": sigma,
            "pi_box": pi_box,
            "oracle_rounds": [c.oracle_rounds for c in convs],
            "fallback": [c.fallback for c in convs],
        },
    )


def _dual_cut(inst, sigma, convs, duals, iteration) -> OptimalityCut:
    """theta >= sum_w p (pi'(r^l - T^l x) + sum_i sigma_i z_i (2x_i - 1))."""
    sig = sigma.values
    n = inst.first.n
    const = 0.0
    coef = np.zeros(n)
    for w, sc in enumerate(inst.scenarios):
        _, pi, z = duals[w]
        conv = convs[w]
        const += sc.p * (float(pi @ conv.r) - float(sig @ z))
        coef += sc.p * (-(conv.T.T @ pi) + 2.0 * sig * z)
    return OptimalityCut(
        const=const,
        coef=coef,
        iteration=iteration,
        digest=digest_solutions([d[1] for d in duals] + [d[2] for d in duals]),
    )


def _global_theta_lb(inst, sigma, engine):
    """Lower bound on sum_w p Qhat over X: recourse value bounds plus the
    nonnegative sigma'x term floored at zero."""
    total = 0.0
    for w, sc in enumerate(inst.scenarios):
        _, lo = _interval_bounds(inst, w, engine)
        total += sc.p * lo
    return total
