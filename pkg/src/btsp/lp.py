"""Bounded-variable primal simplex with dual values and basis access.

The engine is deliberately self-contained: every subproblem and master in
this package runs through it, and the Gomory generator reads its final
tableau.  Models are dense; everything here is desk-scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LE, EQ, GE = "<=", "=", ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITER_LIMIT = "iter_limit"

# column status codes (internal) and their exported names
_BASIC, _AT_LO, _AT_UP, _FREE = 0, 1, 2, 3
STATUS_NAMES = {_BASIC: "basic", _AT_LO: "at_lower", _AT_UP: "at_upper", _FREE: "nonbasic_free"}

_FEAS_TOL = 1e-7
_PIVOT_TOL = 1e-9
_DEGENERATE_STEP = 1e-10
_BLAND_TRIGGER = 1000
_REFACTOR_EVERY = 64


class LpError(Exception):
    pass


@dataclass
class LpModel:
    """min/max c'x subject to A x (<=,=,>=) b and lb <= x <= ub."""

    c: np.ndarray
    A: np.ndarray
    rel: list
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.lb = np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.asarray(self.ub, dtype=float).ravel()
        self.rel = list(self.rel)
        if self.sense not in ("min", "max"):
            raise LpError("sense must be 'min' or 'max'")
        if len(self.rel) != self.b.size or self.A.shape[0] != self.b.size:
            raise LpError("row data sizes disagree")
        if any(r not in (LE, EQ, GE) for r in self.rel):
            raise LpError("row relation must be one of <=, =, >=")
        if not np.all(np.isfinite(self.b)):
            raise LpError("rhs must be finite")
        if np.any(self.lb > self.ub + 1e-12):
            raise LpError("lb > ub")

    @property
    def nvars(self):
        return self.c.size

    @property
    def nrows(self):
        return self.b.size


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = None
    obj: float = np.nan
    duals: np.ndarray = None
    reduced_costs: np.ndarray = None
    var_status: list = None
    row_status: list = None
    pivots: int = 0
    # final tableau state, consumed by the Gomory generator
    _basis: np.ndarray = field(default=None, repr=False)
    _binv: np.ndarray = field(default=None, repr=False)
    _Aint: np.ndarray = field(default=None, repr=False)
    _col_value: np.ndarray = field(default=None, repr=False)
    _col_stat: np.ndarray = field(default=None, repr=False)
    _slack_of_row: dict = field(default=None, repr=False)
    _nstruct: int = 0


def _bound_start(lo, hi):
    """Starting value/status of a nonbasic column: finite bound nearest 0."""
    if np.isinf(lo) and np.isinf(hi):
        return 0.0, _FREE
    if np.isinf(lo):
        return hi, _AT_UP
    if np.isinf(hi):
        return lo, _AT_LO
    return (lo, _AT_LO) if abs(lo) <= abs(hi) else (hi, _AT_UP)


class _Simplex:
    """Equality-form bounded simplex: min c'x, A x = b, lo <= x <= hi."""

    def __init__(self, A, b, lo, hi, pivot_cap):
        self.A = A
        self.b = b
        self.lo = lo
        self.hi = hi
        self.m, self.n = A.shape
        self.pivot_cap = pivot_cap
        self.pivots = 0
        self.degenerate = 0
        self.value = np.zeros(self.n)
        self.stat = np.zeros(self.n, dtype=np.int8)
        self.basis = None
        self.binv = None

    def _refactor(self):
        try:
            self.binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise LpError("singular basis") from exc
        nonbasic = np.ones(self.n, dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.A[:, nonbasic] @ self.value[nonbasic]
        self.value[self.basis] = self.binv @ rhs

    def _price(self, c):
        y = self.binv.T @ c[self.basis]
        rc = c - self.A.T @ y
        movable = self.lo < self.hi
        elig = movable & (
            ((self.stat == _AT_LO) & (rc < -_FEAS_TOL))
            | ((self.stat == _AT_UP) & (rc > _FEAS_TOL))
            | ((self.stat == _FREE) & (np.abs(rc) > _FEAS_TOL))
        )
        if not elig.any():
            return -1, rc
        if self.degenerate > _BLAND_TRIGGER:
            return int(np.flatnonzero(elig)[0]), rc
        score = np.where(elig, np.abs(rc), -1.0)
        return int(np.argmax(score)), rc

    def _step(self, c):
        e, rc = self._price(c)
        if e < 0:
            return "optimal"
        if self.stat[e] == _AT_UP or (self.stat[e] == _FREE and rc[e] > 0):
            direction = -1.0
        else:
            direction = 1.0
        d = self.binv @ self.A[:, e]
        move = direction * d  # basic values change by -move * t

        bas = self.basis
        lims = np.full(self.m, np.inf)
        pos = move > _PIVOT_TOL
        neg = move < -_PIVOT_TOL
        if pos.any():
            lims[pos] = np.maximum(self.value[bas[pos]] - self.lo[bas[pos]], 0.0) / move[pos]
        if neg.any():
            lims[neg] = np.maximum(self.hi[bas[neg]] - self.value[bas[neg]], 0.0) / (-move[neg])
        t_row = lims.min() if self.m else np.inf
        t_flip = self.hi[e] - self.lo[e]
        if np.isinf(t_row) and np.isinf(t_flip):
            return "unbounded"
        self.pivots += 1

        if t_flip < t_row - _PIVOT_TOL:
            self.value[bas] -= move * t_flip
            self.value[e] = self.hi[e] if direction > 0 else self.lo[e]
            self.stat[e] = _AT_UP if direction > 0 else _AT_LO
            self.degenerate = self.degenerate + 1 if t_flip <= _DEGENERATE_STEP else 0
            return None

        ties = np.flatnonzero(lims <= t_row + _PIVOT_TOL)
        leave = int(ties[np.argmin(bas[ties])])  # smallest variable index
        out = bas[leave]
        self.value[bas] -= move * t_row
        self.value[e] += direction * t_row
        self.value[out] = self.lo[out] if move[leave] > 0 else self.hi[out]
        self.stat[out] = _AT_LO if move[leave] > 0 else _AT_UP
        self.stat[e] = _BASIC
        self.basis[leave] = e
        self.degenerate = self.degenerate + 1 if t_row <= _DEGENERATE_STEP else 0

        piv = d[leave]
        if abs(piv) < 1e-11 or self.pivots % _REFACTOR_EVERY == 0:
            self._refactor()
            return None
        row = self.binv[leave, :] / piv
        self.binv -= np.outer(d, row)
        self.binv[leave, :] = row
        return None

    def _run(self, c):
        while True:
            if self.pivots >= self.pivot_cap:
                return "iter_limit"
            out = self._step(c)
            if out is not None:
                return out

    def solve(self, cost):
        for j in range(self.n):
            self.value[j], self.stat[j] = _bound_start(self.lo[j], self.hi[j])
        resid = self.b - self.A @ self.value
        # artificial columns give an immediate feasible basis
        nart = self.m
        art_sign = np.where(resid >= 0, 1.0, -1.0)
        self.A = np.hstack([self.A, np.diag(art_sign)])
        self.lo = np.concatenate([self.lo, np.zeros(nart)])
        self.hi = np.concatenate([self.hi, np.full(nart, np.inf)])
        self.value = np.concatenate([self.value, np.abs(resid)])
        self.stat = np.concatenate([self.stat, np.full(nart, _BASIC, dtype=np.int8)])
        self.basis = np.arange(self.n, self.n + nart)
        self.n += nart
        self.binv = np.diag(art_sign)

        phase1 = np.zeros(self.n)
        phase1[self.n - nart :] = 1.0
        out = self._run(phase1)
        if out == "iter_limit":
            return ITER_LIMIT
        scale = 1.0 + float(np.abs(self.b).max(initial=0.0))
        if self.value[self.n - nart :].sum() > _FEAS_TOL * scale:
            return INFEASIBLE
        self.lo[self.n - nart :] = 0.0
        self.hi[self.n - nart :] = 0.0
        self.degenerate = 0
        phase2 = np.concatenate([cost, np.zeros(nart)])
        out = self._run(phase2)
        if out == "iter_limit":
            return ITER_LIMIT
        if out == "unbounded":
            return UNBOUNDED
        self._refactor()
        return OPTIMAL


def solve_lp(model: LpModel, pivot_cap=None) -> LpSolution:
    """Solve an LP.

    Dual convention: at optimality of a minimization, >=-rows carry
    nonnegative duals and <=-rows nonpositive ones; a maximization reports
    the duals of the equivalent negated minimization with flipped sign, so
    a binding <=-row of a maximization prices out nonnegative.
    """
    n, m = model.nvars, model.nrows
    minimize = model.sense == "min"
    c_min = model.c if minimize else -model.c

    if m == 0:
        return _solve_boxed(model, c_min)

    slack_cols = []
    slack_of_row = {}
    for i, rel in enumerate(model.rel):
        if rel == EQ:
            continue
        col = np.zeros(m)
        col[i] = 1.0 if rel == LE else -1.0
        slack_of_row[i] = n + len(slack_cols)
        slack_cols.append(col)
    ns = len(slack_cols)
    Aint = np.hstack([model.A, np.column_stack(slack_cols)]) if ns else model.A.copy()
    lo = np.concatenate([model.lb, np.zeros(ns)])
    hi = np.concatenate([model.ub, np.full(ns, np.inf)])
    cint = np.concatenate([c_min, np.zeros(ns)])

    cap = pivot_cap if pivot_cap is not None else max(10 * (m + n + ns) ** 2, 200)
    spx = _Simplex(Aint, model.b.copy(), lo, hi, cap)
    status = spx.solve(cint)
    sol = LpSolution(status=status, pivots=spx.pivots)
    if status != OPTIMAL:
        return sol

    nss = n + ns
    x = spx.value[:n].copy()
    cost_full = np.concatenate([cint, np.zeros(m)])
    y_min = spx.binv.T @ cost_full[spx.basis]
    duals = y_min if minimize else -y_min
    obj = float(model.c @ x)

    sol.x = x
    sol.obj = obj
    sol.duals = duals
    sol.reduced_costs = model.c - model.A.T @ duals
    sol.var_status = [STATUS_NAMES[s] for s in spx.stat[:n]]
    sol.row_status = [
        STATUS_NAMES[spx.stat[slack_of_row[i]]] if i in slack_of_row else "eq"
        for i in range(m)
    ]
    sol._basis = spx.basis.copy()
    sol._binv = spx.binv.copy()
    sol._Aint = spx.A[:, :nss]
    sol._col_value = spx.value[:nss].copy()
    sol._col_stat = spx.stat[:nss].copy()
    sol._slack_of_row = dict(slack_of_row)
    sol._nstruct = n
    _self_check(model, sol)
    return sol


def _solve_boxed(model, c_min):
    """Row-free LP: each variable sits at the bound its cost prefers."""
    x = np.empty(model.nvars)
    for j in range(model.nvars):
        lo, hi = model.lb[j], model.ub[j]
        if c_min[j] > 0:
            tgt = lo
        elif c_min[j] < 0:
            tgt = hi
        else:
            tgt = _bound_start(lo, hi)[0]
        if np.isinf(tgt):
            return LpSolution(status=UNBOUNDED)
        x[j] = tgt
    sol = LpSolution(status=OPTIMAL, x=x, obj=float(model.c @ x))
    sol.duals = np.zeros(0)
    sol.reduced_costs = model.c.copy()
    sol.var_status = [
        "at_lower" if x[j] == model.lb[j] else "at_upper" for j in range(model.nvars)
    ]
    sol.row_status = []
    return sol


def _self_check(model, sol):
    """Cheap optimality certificates; a failure here is an engine bug."""
    scale = 1.0 + float(np.abs(model.b).max(initial=0.0)) + float(
        np.abs(sol.x).max(initial=0.0)
    )
    row_val = model.A @ sol.x
    for i, rel in enumerate(model.rel):
        resid = row_val[i] - model.b[i]
        ok = (
            resid <= _FEAS_TOL * scale
            if rel == LE
            else resid >= -_FEAS_TOL * scale
            if rel == GE
            else abs(resid) <= _FEAS_TOL * scale
        )
        if not ok:
            raise LpError(f"primal residual {resid:.2e} on row {i}")
    if np.any(sol.x < model.lb - _FEAS_TOL * scale) or np.any(
        sol.x > model.ub + _FEAS_TOL * scale
    ):
        raise LpError("bound violation at optimality")
    # strong duality: obj == y'b + reduced costs priced at the active bounds
    dual_obj = float(sol.duals @ model.b)
    rc = sol.reduced_costs
    keep = np.abs(rc) >= 1e-9
    dual_obj += float(rc[keep] @ sol.x[keep])
    if abs(dual_obj - sol.obj) > 1e-6 * (1.0 + abs(sol.obj)):
        raise LpError(f"duality gap {dual_obj - sol.obj:.3e} exceeds tolerance")
