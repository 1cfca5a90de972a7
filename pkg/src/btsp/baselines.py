"""Benchmark solvers: an integer L-shaped variant driven purely by integer
optimality cuts, and the linearized deterministic extensive form."""

from __future__ import annotations

import time

import numpy as np

from .cuts import (
    OPTIMAL_RUN,
    TIME_LIMIT_RUN,
    IterationLog,
    RunResult,
    gap_closed,
    laporte_cut,
    relative_gap,
    solve_master,
)
from .lp import GE, LE, LpModel
from .milp import MilpModel
from .minmax import _interval_bounds
from .model import (
    MIN_MIN,
    BINARY,
    ModelError,
    evaluate_recourse,
)


def recourse_lower_bound(inst, engine=None):
    """Global bound L <= E[Q(x, .)] over X from the per-scenario relaxation
    with x relaxed; sound for either recourse sense."""
    total = 0.0
    for w, sc in enumerate(inst.scenarios):
        _, lo = _interval_bounds(inst, w, engine)
        total += sc.p * lo
    return total


def run_integer_lshaped(
    inst, tol=1e-4, time_limit=3600.0, engine=None, max_iterations=None
) -> RunResult:
    """Master with integer optimality cuts only: each visited x gets a cut
    tight there and slack enough everywhere else (no dual information)."""
    fs = inst.first
    if any(k != BINARY for k in fs.kind):
        raise ModelError("the integer L-shaped benchmark needs a pure binary first stage")
    t0 = time.monotonic()
    deadline = t0 + time_limit if time_limit else None
    L = recourse_lower_bound(inst, engine)
    offset = np.zeros(fs.n)

    x_cur, _, _ = solve_master(fs, offset, [], include_theta=False, engine=engine)
    lb, ub = -np.inf, np.inf
    x_best = x_cur.copy()
    cuts = []
    logs = []
    status = OPTIMAL_RUN
    it = 0
    while True:
        it += 1
        phi = sum(
            sc.p * evaluate_recourse(inst, x_cur, w, engine)
            for w, sc in enumerate(inst.scenarios)
        )
        val = float(fs.c @ x_cur) + phi
        if val < ub:
            ub = val
            x_best = x_cur.copy()
        cuts.append(laporte_cut(x_cur, phi, L, it))
        x_cur, _, master_val = solve_master(
            fs, offset, cuts, theta_lb=min(L, 0.0) - 1.0, engine=engine
        )
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
        x=x_best, objective=ub, status=status, logs=logs, cuts=cuts,
        extras={"recourse_lower_bound": L},
    )


def build_extensive_form(inst) -> MilpModel:
    """One monolithic model over (x, y(w)); products x_i y_j(w) on nonzero
    G entries are replaced exactly via binary-product envelopes."""
    if inst.sense != MIN_MIN:
        raise ModelError("no extensive minimization form exists for min-max recourse")
    fs = inst.first
    n = fs.n
    for w, sc in enumerate(inst.scenarios):
        rows_touch = np.flatnonzero(np.abs(sc.G).sum(axis=1) > 1e-12)
        for i in rows_touch:
            if fs.kind[i] != BINARY:
                raise ModelError(f"x[{i}] enters G but is not binary")
        if np.any(~np.isfinite(sc.ylb)) or np.any(~np.isfinite(sc.yub)):
            raise ModelError("extensive form needs finite y bounds")

    y_off = []
    w_off = []
    prods = []
    ncols = n
    for w, sc in enumerate(inst.scenarios):
        y_off.append(ncols)
        ncols += sc.n2
        pw = [(i, j) for i in range(n) for j in range(sc.n2) if abs(sc.G[i, j]) > 1e-12]
        prods.append(pw)
        w_off.append(ncols)
        ncols += len(pw)

    c = np.zeros(ncols)
    c[:n] = fs.c
    lb = np.full(ncols, -np.inf)
    ub = np.full(ncols, np.inf)
    lb[:n], ub[:n] = fs.lb, fs.ub
    integer = np.zeros(ncols, dtype=bool)
    integer[:n] = fs.integer_mask()

    rows, rel, rhs = [], [], []
    for irow in range(fs.A.shape[0]):
        row = np.zeros(ncols)
        row[:n] = fs.A[irow]
        rows.append(row)
        rel.append(fs.rel[irow])
        rhs.append(fs.b[irow])

    for w, sc in enumerate(inst.scenarios):
        yc = y_off[w]
        c[yc : yc + sc.n2] += sc.p * sc.q
        lb[yc : yc + sc.n2] = sc.ylb
        ub[yc : yc + sc.n2] = sc.yub
        integer[yc : yc + sc.n2] = sc.y_integer_mask()
        for irow in range(sc.m2):
            row = np.zeros(ncols)
            row[:n] = sc.T[irow]
            row[yc : yc + sc.n2] = sc.W[irow]
            rows.append(row)
            rel.append(sc.rel[irow])
            rhs.append(sc.r[irow])
        for k, (i, j) in enumerate(prods[w]):
            wc = w_off[w] + k
            c[wc] = sc.p * sc.G[i, j]
            lo_y, hi_y = sc.ylb[j], sc.yub[j]
            lb[wc] = min(lo_y, 0.0)
            ub[wc] = max(hi_y, 0.0)
            # w <= hi*x ; w >= lo*x ; w <= y - lo*(1-x) ; w >= y - hi*(1-x)
            for coef_x, coef_y, r0, rl in (
                (-hi_y, 0.0, 0.0, LE),
                (-lo_y, 0.0, 0.0, GE),
                (-lo_y, -1.0, -lo_y, LE),
                (-hi_y, -1.0, -hi_y, GE),
            ):
                row = np.zeros(ncols)
                row[wc] = 1.0
                row[i] = coef_x
                row[yc + j] += coef_y
                rows.append(row)
                rel.append(rl)
                rhs.append(r0)

    lp = LpModel(c, np.array(rows), rel, np.array(rhs, dtype=float), lb, ub, "min")
    return MilpModel(lp, integer)
