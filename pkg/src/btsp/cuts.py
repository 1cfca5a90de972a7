"""Shared cutting-plane plumbing: optimality cuts, iteration logging, and
the master MILP each driver re-solves per iteration."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .lp import GE, INFEASIBLE, OPTIMAL, LpModel
from .milp import MilpModel

THETA_LB = -1e12

OPTIMAL_RUN = "optimal"
TIME_LIMIT_RUN = "time_limit"
UNBOUNDED_RUN = "unbounded"
ALL_INFEASIBLE_RUN = "all_infeasible"


class MasterError(Exception):
    pass


@dataclass
class OptimalityCut:
    """Affine bound const + coef'x on the aggregated reformulated recourse."""

    const: float
    coef: np.ndarray
    iteration: int
    digest: str = ""

    def value(self, x):
        return self.const + float(self.coef @ np.asarray(x, dtype=float))


@dataclass
class NoGoodCut:
    """Excludes exactly one binary point from X."""

    x: np.ndarray
    iteration: int


@dataclass
class IterationLog:
    iteration: int
    lb: float
    ub: float
    gap: float
    wall: float
    n_cuts: int
    x: np.ndarray


@dataclass
class RunResult:
    x: np.ndarray
    objective: float
    status: str
    logs: list = field(default_factory=list)
    cuts: list = field(default_factory=list)
    feasibility_cuts: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.logs)

    @property
    def gap(self):
        return self.logs[-1].gap if self.logs else np.inf


def digest_solutions(parts):
    h = hashlib.sha256()
    for a in parts:
        h.update(np.ascontiguousarray(np.round(np.asarray(a, dtype=float), 9)).tobytes())
    return h.hexdigest()[:16]


def relative_gap(lb, ub):
    if not np.isfinite(ub) or not np.isfinite(lb):
        return np.inf
    return (ub - lb) / max(abs(ub), 1e-12)


def gap_closed(lb, ub, tol):
    """Termination test with a small absolute slack so tol=0 survives
    floating point."""
    if not np.isfinite(ub) or not np.isfinite(lb):
        return False
    return (ub - lb) <= tol * max(abs(ub), 1e-12) + 1e-9 * (1.0 + abs(ub))


def laporte_cut(x_gen, s_val, l_val, iteration) -> OptimalityCut:
    """Integer optimality cut: equals s_val at its binary generator and at
    most l_val anywhere else, with l_val a valid global lower bound."""
    x_gen = np.asarray(x_gen, dtype=float)
    if np.any(np.abs(x_gen - np.round(x_gen)) > 1e-6):
        raise MasterError("integer optimality cuts need a binary generator")
    s_val = max(float(s_val), float(l_val))
    ones = np.round(x_gen).astype(bool)
    slope = s_val - l_val
    coef = np.where(ones, slope, -slope)
    const = l_val + slope * (1.0 - float(ones.sum()))
    return OptimalityCut(const=const, coef=coef, iteration=iteration, digest="laporte")


def nogood_row(x, n):
    """sum_{i: x_i=0} v_i + sum_{i: x_i=1} (1 - v_i) >= 1 as (coef, rhs)."""
    x = np.asarray(x)
    if np.any(np.abs(x - np.round(x)) > 1e-6) or np.any(x < -1e-6) or np.any(x > 1 + 1e-6):
        raise MasterError("no-good cuts need a binary generator")
    ones = np.round(x).astype(bool)
    coef = np.where(ones, -1.0, 1.0)
    rhs = 1.0 - float(ones.sum())
    return coef, rhs


def solve_master(
    first,
    offset,
    cuts,
    nogoods=(),
    theta_lb=THETA_LB,
    include_theta=True,
    engine=None,
):
    """min (c + offset)'x + theta over X with the accumulated cuts.

    Returns (x, theta, value).  With ``include_theta=False`` only the
    first-stage part is optimized (used to seed x^1).
    """
    from .backend import default_engine

    eng = engine or default_engine()
    n = first.n
    ncols = n + (1 if include_theta else 0)
    c = np.zeros(ncols)
    c[:n] = first.c + np.asarray(offset, dtype=float)
    if include_theta:
        c[n] = 1.0

    rows, rel, rhs = [], [], []
    for i in range(first.A.shape[0]):
        row = np.zeros(ncols)
        row[:n] = first.A[i]
        rows.append(row)
        rel.append(first.rel[i])
        rhs.append(first.b[i])
    if include_theta:
        for cut in cuts:
            row = np.zeros(ncols)
            row[:n] = -cut.coef
            row[n] = 1.0
            rows.append(row)
            rel.append(GE)
            rhs.append(cut.const)
    for ng in nogoods:
        coef, r0 = nogood_row(ng.x, n)
        row = np.zeros(ncols)
        row[:n] = coef
        rows.append(row)
        rel.append(GE)
        rhs.append(r0)

    lb = np.concatenate([first.lb, [theta_lb]]) if include_theta else first.lb.copy()
    ub = np.concatenate([first.ub, [np.inf]]) if include_theta else first.ub.copy()
    A = np.array(rows) if rows else np.zeros((0, ncols))
    lp = LpModel(c, A, rel, np.array(rhs, dtype=float), lb, ub, "min")
    integer = np.concatenate([first.integer_mask(), [False]]) if include_theta else first.integer_mask()
    sol = eng.solve_milp(MilpModel(lp, integer))
    if sol.status == INFEASIBLE:
        raise MasterError("master infeasible (X empty or no-goods exhausted X)")
    if sol.status != OPTIMAL:
        raise MasterError(f"master solve ended with status {sol.status}")
    x = sol.x[:n].copy()
    theta = float(sol.x[n]) if include_theta else None
    return x, theta, float(sol.obj)
