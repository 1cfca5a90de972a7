"""Branch-and-bound MILP solver on top of the simplex engine.

Deterministic by construction: most-fractional branching with ties to the
lowest index, best-bound node selection with FIFO ties.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np

from .lp import INFEASIBLE, ITER_LIMIT, OPTIMAL, UNBOUNDED, LpError, LpModel, solve_lp

NODE_LIMIT = "node_limit"
TIME_LIMIT = "time_limit"

_INT_TOL = 1e-6


@dataclass
class MilpModel:
    lp: LpModel
    integer: np.ndarray  # bool mask over variables

    def __post_init__(self):
        self.integer = np.asarray(self.integer, dtype=bool).ravel()
        if self.integer.size != self.lp.nvars:
            raise LpError("integrality mask size mismatch")


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray = None
    obj: float = np.nan
    bound: float = np.nan
    nodes: int = 0


def _fractional(x, integer_mask):
    """Index of the most fractional integer variable, or -1 if integral."""
    frac = np.where(integer_mask, np.abs(x - np.round(x)), 0.0)
    cand = frac > _INT_TOL
    if not cand.any():
        return -1
    dist = np.where(cand, np.abs(frac - 0.5), np.inf)
    return int(np.argmin(dist))


def solve_milp(
    model: MilpModel,
    node_limit=1_000_000,
    time_limit=None,
    gap_abs=1e-6,
    gap_rel=1e-6,
) -> MilpSolution:
    """Globally solve a bounded mixed-integer LP by branch and bound."""
    lp0 = model.lp
    mask = model.integer
    if np.any(mask & (~np.isfinite(lp0.lb) | ~np.isfinite(lp0.ub))):
        raise LpError("integer variables must have finite bounds")
    minimize = lp0.sense == "min"
    sgn = 1.0 if minimize else -1.0

    def relax(lb, ub):
        return solve_lp(LpModel(lp0.c, lp0.A, lp0.rel, lp0.b, lb, ub, lp0.sense))

    deadline = time.monotonic() + time_limit if time_limit else None
    # integer bounds are pre-tightened to the lattice
    lb0 = lp0.lb.copy()
    ub0 = lp0.ub.copy()
    lb0[mask] = np.ceil(lb0[mask] - _INT_TOL)
    ub0[mask] = np.floor(ub0[mask] + _INT_TOL)
    if np.any(lb0 > ub0 + 1e-12):
        return MilpSolution(status=INFEASIBLE)

    root = relax(lb0, ub0)
    if root.status in (INFEASIBLE, UNBOUNDED, ITER_LIMIT):
        return MilpSolution(status=root.status, nodes=1)

    seq = 0
    heap = [(sgn * root.obj, seq, lb0, ub0, root)]
    incumbent = None
    inc_val = np.inf  # in min-form
    nodes = 0
    status = OPTIMAL

    def gap_ok(bound):
        return bound >= inc_val - max(gap_abs, gap_rel * abs(inc_val))

    while heap:
        if nodes >= node_limit:
            status = NODE_LIMIT
            break
        if deadline is not None and time.monotonic() > deadline:
            status = TIME_LIMIT
            break
        bound, _, lb, ub, sol = heapq.heappop(heap)
        if incumbent is not None and gap_ok(bound):
            heapq.heappush(heap, (bound, -1, lb, ub, sol))
            break  # best-bound order: everything left is pruned
        nodes += 1
        if sol is None:
            sol = relax(lb, ub)
            if sol.status == INFEASIBLE:
                continue
            if sol.status in (UNBOUNDED, ITER_LIMIT):
                return MilpSolution(status=sol.status, nodes=nodes)
            bound = sgn * sol.obj
            if incumbent is not None and gap_ok(bound):
                continue
        j = _fractional(sol.x, mask)
        if j < 0:
            x = sol.x.copy()
            x[mask] = np.round(x[mask])
            val = sgn * float(lp0.c @ x)
            if val < inc_val - 1e-12:
                incumbent, inc_val = x, val
            continue
        v = sol.x[j]
        lo_ub = ub.copy()
        lo_ub[j] = np.floor(v)
        hi_lb = lb.copy()
        hi_lb[j] = np.ceil(v)
        for child_lb, child_ub in ((lb, lo_ub), (hi_lb, ub)):
            if child_lb[j] > child_ub[j] + 1e-12:
                continue
            seq += 1
            heapq.heappush(heap, (bound, seq, child_lb, child_ub, None))

    best_open = min((h[0] for h in heap), default=np.inf)
    bound_min = min(best_open, inc_val)
    if incumbent is None:
        if status == OPTIMAL:
            return MilpSolution(status=INFEASIBLE, nodes=nodes)
        return MilpSolution(status=status, nodes=nodes, bound=sgn * bound_min)
    return MilpSolution(
        status=status,
        x=incumbent,
        obj=sgn * inc_val,
        bound=sgn * bound_min,
        nodes=nodes,
    )
