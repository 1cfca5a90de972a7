"""Exact cutting-plane method for the min-max problem.

The recourse maximization gets a copy z of the first stage in its
constraints; multipliers on z = x are fixed analytically to
sigma_i (2 x_i - 1), which is optimal once sigma is large enough, and the
resulting reformulation is decomposed L-shaped style.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cuts import (
    OPTIMAL_RUN,
    TIME_LIMIT_RUN,
    IterationLog,
    OptimalityCut,
    RunResult,
    digest_solutions,
    gap_closed,
    relative_gap,
    solve_master,
)
from .lp import GE, LE, OPTIMAL, UNBOUNDED, LpModel
from .milp import MilpModel
from .model import MIN_MAX, ModelError, assumption_issues

INTERVAL = "interval"
OPTIMIZATION = "optimization"
USER = "user-supplied"


class SigmaError(ModelError):
    pass


@dataclass
class SigmaVector:
    """Multiplier magnitudes, zero off the coupled index set."""

    values: np.ndarray
    provenance: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0):
            raise SigmaError("sigma must be nonnegative")


def user_sigma(inst, value):
    """Accept a scalar or vector verbatim, applied on the coupled set."""
    vals = np.zeros(inst.first.n)
    vals[inst.first.coupled] = value
    return SigmaVector(vals, USER)


def _require_minmax(inst):
    if inst.sense != MIN_MAX:
        raise ModelError("this driver handles min-max instances")
    issues = assumption_issues(inst)
    if issues:
        raise ModelError("; ".join(i.message for i in issues))


def _mccormick_rows(ncols, wcol, acol, bcol, aL, aU, bL, bU):
    """Envelope rows w - alpha*b - beta*a (rel) -alpha*beta for w = a*b on
    [aL,aU] x [bL,bU]; exact when a is binary and at a bound."""
    out = []
    for alpha, beta, rel in ((aL, bL, GE), (aU, bU, GE), (aU, bL, LE), (aL, bU, LE)):
        row = np.zeros(ncols)
        row[wcol] = 1.0
        row[bcol] -= alpha
        row[acol] -= beta
        out.append((row, rel, -alpha * beta))
    return out


def _interval_bounds(inst, w, engine):
    """LP bounds on (q + G'x)'y with the objective x and the constraint x
    relaxed independently over X's continuous relaxation."""
    from .backend import default_engine

    eng = engine or default_engine()
    fs = inst.first
    sc = inst.scenarios[w]
    n, n2 = fs.n, sc.n2
    prods = [(i, j) for i in range(n) for j in range(n2) if abs(sc.G[i, j]) > 1e-12]
    # columns: xo | xc | y | w-products
    xo, xc, y0, w0 = 0, n, 2 * n, 2 * n + n2
    ncols = 2 * n + n2 + len(prods)

    c = np.zeros(ncols)
    c[y0 : y0 + n2] = sc.q
    for k, (i, j) in enumerate(prods):
        c[w0 + k] = sc.G[i, j]

    rows, rel, rhs = [], [], []
    for blk in (xo, xc):
        for irow in range(fs.A.shape[0]):
            row = np.zeros(ncols)
            row[blk : blk + n] = fs.A[irow]
            rows.append(row)
            rel.append(fs.rel[irow])
            rhs.append(fs.b[irow])
    for irow in range(sc.m2):
        row = np.zeros(ncols)
        row[xc : xc + n] = sc.T[irow]
        row[y0 : y0 + n2] = sc.W[irow]
        rows.append(row)
        rel.append(sc.rel[irow])
        rhs.append(sc.r[irow])
    for k, (i, j) in enumerate(prods):
        for row, rl, rh in _mccormick_rows(
            ncols, w0 + k, xo + i, y0 + j, fs.lb[i], fs.ub[i], sc.ylb[j], sc.yub[j]
        ):
            rows.append(row)
            rel.append(rl)
            rhs.append(rh)

    lb = np.concatenate([fs.lb, fs.lb, sc.ylb, np.full(len(prods), -np.inf)])
    ub = np.concatenate([fs.ub, fs.ub, sc.yub, np.full(len(prods), np.inf)])
    out = {}
    for sense in ("max", "min"):
        sol = eng.solve_lp(LpModel(c, np.array(rows), rel, np.array(rhs), lb, ub, sense))
        if sol.status == UNBOUNDED:
            raise SigmaError(
                "relaxation unbounded while bounding sigma; tighten variable bounds"
            )
        if sol.status != OPTIMAL:
            raise SigmaError(f"sigma bound LP ended with status {sol.status}")
        out[sense] = sol.obj
    return out["max"], out["min"]


def _optimization_sigma(inst, i, w, engine):
    """Per-coordinate MILP over x and a difference of feasible y points."""
    from .backend import default_engine

    eng = engine or default_engine()
    fs = inst.first
    sc = inst.scenarios[w]
    n, n2 = fs.n, sc.n2
    nI = len(fs.coupled)
    gcols = [j for j in range(n2) if abs(sc.G[i, j]) > 1e-12]
    # columns: x | y1 | y2 | w1 (x_i*y1_j) | w2 (x_i*y2_j)
    x0, y1c, y2c = 0, n, n + n2
    w1c = n + 2 * n2
    w2c = w1c + len(gcols)
    ncols = w2c + len(gcols)

    c = np.zeros(ncols)
    c[y1c : y1c + n2] = sc.q / nI
    c[y2c : y2c + n2] = -sc.q / nI
    for k, j in enumerate(gcols):
        c[w1c + k] = sc.G[i, j]
        c[w2c + k] = -sc.G[i, j]

    rows, rel, rhs = [], [], []
    for irow in range(fs.A.shape[0]):
        row = np.zeros(ncols)
        row[x0:n] = fs.A[irow]
        rows.append(row)
        rel.append(fs.rel[irow])
        rhs.append(fs.b[irow])
    for blk in (y1c, y2c):
        for irow in range(sc.m2):
            row = np.zeros(ncols)
            row[x0:n] = sc.T[irow]
            row[blk : blk + n2] = sc.W[irow]
            rows.append(row)
            rel.append(sc.rel[irow])
            rhs.append(sc.r[irow])
    for k, j in enumerate(gcols):
        for wc, yc in ((w1c + k, y1c + j), (w2c + k, y2c + j)):
            for row, rl, rh in _mccormick_rows(
                ncols, wc, x0 + i, yc, fs.lb[i], fs.ub[i], sc.ylb[j], sc.yub[j]
            ):
                rows.append(row)
                rel.append(rl)
                rhs.append(rh)

    lb = np.concatenate([fs.lb, sc.ylb, sc.ylb, np.full(2 * len(gcols), -np.inf)])
    ub = np.concatenate([fs.ub, sc.yub, sc.yub, np.full(2 * len(gcols), np.inf)])
    integer = np.concatenate(
        [fs.integer_mask(), sc.y_integer_mask(), sc.y_integer_mask(), np.zeros(2 * len(gcols), bool)]
    )
    sol = eng.solve_milp(
        MilpModel(LpModel(c, np.array(rows), rel, np.array(rhs), lb, ub, "max"), integer)
    )
    if sol.status != OPTIMAL:
        raise SigmaError(f"sigma MILP ended with status {sol.status}")
    return max(sol.obj, 0.0)


def compute_sigma(inst, mode=INTERVAL, engine=None) -> SigmaVector:
    """Multiplier magnitudes satisfying the exactness condition.

    ``interval``: one max/min LP pair per scenario bounds the recourse
    objective range; the common value goes on every coupled coordinate.
    ``optimization``: per-coordinate MILPs over x and a difference of
    feasible second-stage points (tighter, dearer).
    """
    _require_minmax(inst)
    fs = inst.first
    vals = np.zeros(fs.n)
    if not fs.coupled:
        return SigmaVector(vals, mode)
    if mode == INTERVAL:
        spread = 0.0
        for w in range(inst.nscen):
            hi, lo = _interval_bounds(inst, w, engine)
            spread = max(spread, hi - lo)
        vals[fs.coupled] = spread
        return SigmaVector(vals, INTERVAL)
    if mode == OPTIMIZATION:
        for i in fs.coupled:
            vals[i] = max(_optimization_sigma(inst, i, w, engine) for w in range(inst.nscen))
        return SigmaVector(vals, OPTIMIZATION)
    raise SigmaError(f"unknown sigma mode {mode!r}")


# ---------------------------------------------------------------------------
# subproblems, cuts, and the main loop


def solve_subproblem(inst, sigma, x, w, fix_z=False, engine=None):
    """Reformulated recourse at x: max (q + G'x)'y + sum sigma_i(2x_i-1)z_i
    with T z + W y (rel) r and z in X; fix_z clamps z to x (restriction,
    still a valid cut source, exact once sigma is valid)."""
    x = np.asarray(x, dtype=float)
    lam = sigma.values * (2.0 * x - 1.0)
    return lagrangian_subproblem(inst, lam, x, w, fix_z=fix_z, engine=engine)


def lagrangian_subproblem(inst, lam, x, w, fix_z=False, engine=None):
    """max (q + G'x)'y + lam'z over T z + W y (rel) r, z in X, y in Y."""
    from .backend import default_engine

    eng = engine or default_engine()
    fs = inst.first
    sc = inst.scenarios[w]
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)

    if fix_z:
        lp = LpModel(
            sc.q + sc.G.T @ x, sc.W, sc.rel, sc.r - sc.T @ x, sc.ylb, sc.yub, "max"
        )
        sol = eng.solve_milp(MilpModel(lp, sc.y_integer_mask()))
        if sol.status != OPTIMAL:
            raise ModelError(f"subproblem status {sol.status} at scenario {w}")
        return sol.obj + float(lam @ x), sol.x.copy(), x.copy()

    n, n2 = fs.n, sc.n2
    ncols = n + n2
    c = np.concatenate([lam, sc.q + sc.G.T @ x])
    rows, rel, rhs = [], [], []
    for irow in range(sc.m2):
        row = np.zeros(ncols)
        row[:n] = sc.T[irow]
        row[n:] = sc.W[irow]
        rows.append(row)
        rel.append(sc.rel[irow])
        rhs.append(sc.r[irow])
    for irow in range(fs.A.shape[0]):
        row = np.zeros(ncols)
        row[:n] = fs.A[irow]
        rows.append(row)
        rel.append(fs.rel[irow])
        rhs.append(fs.b[irow])
    lp = LpModel(
        c,
        np.array(rows) if rows else np.zeros((0, ncols)),
        rel,
        np.array(rhs, dtype=float),
        np.concatenate([fs.lb, sc.ylb]),
        np.concatenate([fs.ub, sc.yub]),
        "max",
    )
    integer = np.concatenate([fs.integer_mask(), sc.y_integer_mask()])
    sol = eng.solve_milp(MilpModel(lp, integer))
    if sol.status != OPTIMAL:
        raise ModelError(f"subproblem status {sol.status} at scenario {w}")
    return sol.obj, sol.x[n:].copy(), sol.x[:n].copy()


def build_cut(inst, sigma, sols, iteration) -> OptimalityCut:
    """Aggregate scenario solutions into theta >= const + coef'x."""
    fs = inst.first
    sig = sigma.values
    const = 0.0
    coef = np.zeros(fs.n)
    for w, sc in enumerate(inst.scenarios):
        _, y, z = sols[w]
        const += sc.p * (float(sc.q @ y) - float(sig @ z))
        coef += sc.p * (sc.G @ y + 2.0 * sig * z)
    return OptimalityCut(
        const=const,
        coef=coef,
        iteration=iteration,
        digest=digest_solutions([s[1] for s in sols] + [s[2] for s in sols]),
    )


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
    fix_z=False,
    threads=1,
    engine=None,
    max_iterations=None,
) -> RunResult:
    """Cutting-plane loop: subproblems at x^l, one aggregated optimality cut
    per iteration, master re-solved as a MILP."""
    _require_minmax(inst)
    if sigma is None:
        sigma = compute_sigma(inst, INTERVAL, engine)
    fs = inst.first
    sig = sigma.values
    offset = -sig  # master objective f(x) - sigma'x + theta
    t0 = time.monotonic()
    deadline = t0 + time_limit if time_limit else None

    x_cur, _, _ = solve_master(fs, offset, [], include_theta=False, engine=engine)
    lb, ub = -np.inf, np.inf
    x_best = x_cur.copy()
    cuts = []
    logs = []
    status = OPTIMAL_RUN
    it = 0
    while True:
        it += 1
        sols = _map_scenarios(
            lambda w: solve_subproblem(inst, sigma, x_cur, w, fix_z, engine),
            inst.nscen,
            threads,
        )
        qhat = sum(sc.p * sols[w][0] for w, sc in enumerate(inst.scenarios))
        phi = float(fs.c @ x_cur) - float(sig @ x_cur) + qhat
        if phi < ub:
            ub = phi
            x_best = x_cur.copy()
        cuts.append(build_cut(inst, sigma, sols, it))
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
        extras={"sigma": sigma, "fix_z": fix_z, "theta_lb": -1e12},
    )
