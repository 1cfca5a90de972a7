"""Regularized variant: no multiplier magnitudes supplied up front.

The master optimizes the multipliers itself, writing each binary-indexed
multiplier as a signed magnitude mu_i (2 x_i - 1) and charging gamma R(mu)
to keep magnitudes small and unique.  Exact for a pure binary first stage
once the magnitude caps admit valid multipliers; approximate otherwise.

Min-min instances are handled through the dualized recourse, which for a
continuous second stage needs no convexification rounds.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cuts import (
    OPTIMAL_RUN,
    THETA_LB,
    TIME_LIMIT_RUN,
    IterationLog,
    MasterError,
    RunResult,
    gap_closed,
    relative_gap,
)
from .lp import GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED, LpModel
from .milp import MilpModel
from .minmax import lagrangian_subproblem
from .model import CONTINUOUS, MIN_MAX, MIN_MIN, BINARY, ModelError

L1 = "l1"
SQUARED_L2 = "squared-l2"


@dataclass
class RegConfig:
    gamma: float = 1e-4
    reg_kind: str = L1
    ubar: float = 1e3  # magnitude cap, scalar or per-variable vector
    per_scenario_mu: bool = False
    objective_scale: float = 1.0
    pl_segments: int = 32  # tangent count for the squared regularizer

    def __post_init__(self):
        if self.gamma < 0:
            raise ModelError("gamma must be nonnegative")
        if self.reg_kind not in (L1, SQUARED_L2):
            raise ModelError(f"unknown regularizer {self.reg_kind!r}")

    def ubar_vector(self, n):
        u = np.asarray(self.ubar, dtype=float)
        u = np.full(n, float(u)) if u.ndim == 0 else u
        if np.any(u <= 0):
            raise ModelError("magnitude caps must be positive")
        return u

    @property
    def effective_gamma(self):
        # scaling the objective by s and keeping gamma is the same run as
        # keeping the objective and charging gamma / s
        return self.gamma / self.objective_scale


@dataclass
class _MasterLayout:
    ncols: int
    theta: int
    blocks: int
    bin_idx: list
    cont_idx: list
    mu: dict
    wprod: dict
    lam: dict
    vprod: dict
    rho: dict


def _build_layout(first, config, nscen):
    bin_idx = [i for i in first.coupled if first.kind[i] == BINARY]
    cont_idx = [i for i in first.coupled if first.kind[i] != BINARY]
    blocks = nscen if config.per_scenario_mu else 1
    col = first.n + 1
    mu, wp, lam, vp, rho = {}, {}, {}, {}, {}
    for b in range(blocks):
        for i in bin_idx:
            mu[(i, b)] = col
            wp[(i, b)] = col + 1
            col += 2
        for i in cont_idx:
            lam[(i, b)] = col
            vp[(i, b)] = col + 1
            col += 2
        if config.reg_kind == SQUARED_L2:
            for i in bin_idx:
                rho[(i, b)] = col
                col += 1
    return _MasterLayout(
        ncols=col, theta=first.n, blocks=blocks,
        bin_idx=bin_idx, cont_idx=cont_idx,
        mu=mu, wprod=wp, lam=lam, vprod=vp, rho=rho,
    )


def _block_of(layout, w):
    return w if layout.blocks > 1 else 0


def solve_master(inst, cuts, config, theta_lb=THETA_LB, engine=None):
    """min f(x) + theta - sum_w p(w) lam(w)'x + gamma R(mu) subject to the
    accumulated cuts.

    ``cuts`` is a list of iterations, each a per-scenario list of triples
    (base, xcoef, z): the cut reads
    theta >= sum_w p(w) (base_w + xcoef_w'x + lam(w)'z_w).
    """
    from .backend import default_engine

    eng = engine or default_engine()
    fs = inst.first
    n = fs.n
    probs = inst.probabilities()
    lay = _build_layout(fs, config, inst.nscen)
    ub_vec = config.ubar_vector(n)
    for i in lay.cont_idx:
        if not (np.isfinite(fs.lb[i]) and np.isfinite(fs.ub[i])):
            raise ModelError("continuous coupled variables need finite bounds")

    c = np.zeros(lay.ncols)
    c[:n] = fs.c
    c[lay.theta] = 1.0
    geff = config.effective_gamma
    for b in range(lay.blocks):
        pw = probs[b] if lay.blocks > 1 else 1.0
        for i in lay.bin_idx:
            c[lay.wprod[(i, b)]] -= pw
            if config.reg_kind == L1:
                c[lay.mu[(i, b)]] += geff
            else:
                c[lay.rho[(i, b)]] += geff
        for i in lay.cont_idx:
            c[lay.vprod[(i, b)]] -= pw

    rows, rel, rhs = [], [], []

    def add(row, r, v):
        rows.append(row)
        rel.append(r)
        rhs.append(v)

    for irow in range(fs.A.shape[0]):
        row = np.zeros(lay.ncols)
        row[:n] = fs.A[irow]
        add(row, fs.rel[irow], fs.b[irow])

    for b in range(lay.blocks):
        for i in lay.bin_idx:
            u = ub_vec[i]
            mu_c, w_c = lay.mu[(i, b)], lay.wprod[(i, b)]
            # w = mu * x_i exactly (x binary): w <= u x ; w <= mu ; w >= mu - u(1-x)
            row = np.zeros(lay.ncols)
            row[w_c] = 1.0
            row[i] = -u
            add(row, LE, 0.0)
            row = np.zeros(lay.ncols)
            row[w_c] = 1.0
            row[mu_c] = -1.0
            add(row, LE, 0.0)
            row = np.zeros(lay.ncols)
            row[w_c] = 1.0
            row[mu_c] = -1.0
            row[i] = -u
            add(row, GE, -u)
            if config.reg_kind == SQUARED_L2:
                for t in np.linspace(0.0, u, config.pl_segments):
                    row = np.zeros(lay.ncols)
                    row[lay.rho[(i, b)]] = 1.0
                    row[mu_c] = -2.0 * t
                    add(row, GE, -t * t)
        for i in lay.cont_idx:
            u = ub_vec[i]
            l_c, v_c = lay.lam[(i, b)], lay.vprod[(i, b)]
            aL, aU, bL, bU = -u, u, fs.lb[i], fs.ub[i]
            for alpha, beta, r0 in ((aL, bL, GE), (aU, bU, GE), (aU, bL, LE), (aL, bU, LE)):
                row = np.zeros(lay.ncols)
                row[v_c] = 1.0
                row[i] -= alpha
                row[l_c] -= beta
                add(row, r0, -alpha * beta)

    for cut in cuts:
        row = np.zeros(lay.ncols)
        row[lay.theta] = 1.0
        base = 0.0
        for w, sc in enumerate(inst.scenarios):
            cw_base, cw_xcoef, z = cut[w]
            base += sc.p * cw_base
            row[:n] -= sc.p * cw_xcoef
            b = _block_of(lay, w)
            for i in lay.bin_idx:
                # lam_i = 2 w_i - mu_i
                row[lay.wprod[(i, b)]] -= sc.p * 2.0 * z[i]
                row[lay.mu[(i, b)]] += sc.p * z[i]
            for i in lay.cont_idx:
                row[lay.lam[(i, b)]] -= sc.p * z[i]
        add(row, GE, base)

    lb = np.zeros(lay.ncols)
    ub = np.full(lay.ncols, np.inf)
    lb[:n], ub[:n] = fs.lb, fs.ub
    lb[lay.theta], ub[lay.theta] = theta_lb, np.inf
    for (i, b), colc in lay.mu.items():
        ub[colc] = ub_vec[i]
    for (i, b), colc in lay.wprod.items():
        ub[colc] = ub_vec[i]
    for (i, b), colc in lay.lam.items():
        lb[colc], ub[colc] = -ub_vec[i], ub_vec[i]
    for (i, b), colc in lay.vprod.items():
        span = ub_vec[i] * max(abs(fs.lb[i]), abs(fs.ub[i]))
        lb[colc], ub[colc] = -span, span
    for (i, b), colc in lay.rho.items():
        ub[colc] = ub_vec[i] ** 2
    integer = np.zeros(lay.ncols, dtype=bool)
    integer[:n] = fs.integer_mask()

    lp = LpModel(c, np.array(rows), rel, np.array(rhs, dtype=float), lb, ub, "min")
    sol = eng.solve_milp(MilpModel(lp, integer))
    if sol.status == INFEASIBLE:
        raise MasterError("regularized master infeasible")
    if sol.status != OPTIMAL:
        raise MasterError(f"regularized master status {sol.status}")

    x = sol.x[:n].copy()
    lam_full = np.zeros((inst.nscen, n))
    mu_full = np.zeros((lay.blocks, n))
    for w in range(inst.nscen):
        b = _block_of(lay, w)
        for i in lay.bin_idx:
            lam_full[w, i] = sol.x[lay.mu[(i, b)]] * (2.0 * round(x[i]) - 1.0)
        for i in lay.cont_idx:
            lam_full[w, i] = sol.x[lay.lam[(i, b)]]
    for b in range(lay.blocks):
        for i in lay.bin_idx:
            mu_full[b, i] = sol.x[lay.mu[(i, b)]]
    return x, float(sol.x[lay.theta]), lam_full, mu_full, float(sol.obj)


def solve_subproblem(inst, x, lam_w, w, engine=None):
    """Scenario subproblem at explicit multipliers lam_w (min-max shape)."""
    return lagrangian_subproblem(inst, lam_w, x, w, fix_z=False, engine=engine)


def _minmax_oracle(inst, engine):
    def sub(x, lam_w, w):
        val, y, z = lagrangian_subproblem(inst, lam_w, x, w, engine=engine)
        sc = inst.scenarios[w]
        return val, (float(sc.q @ y), sc.G @ y, z)

    return sub


def _minmin_dual_oracle(inst, pi_box, engine):
    """Dualized continuous recourse: max pi'(r - T x) + lam'z over
    W'pi - G'z <= q, z in X, pi >= 0 (boxed)."""
    from .backend import default_engine
    from .minmin import convexify

    eng = engine or default_engine()
    fs = inst.first
    convs = [convexify(sc, fs.n) for sc in inst.scenarios]

    def sub(x, lam_w, w):
        sc = inst.scenarios[w]
        conv = convs[w]
        m = conv.m
        ncols = m + fs.n
        c = np.concatenate([conv.r - conv.T @ x, lam_w])
        rows, rel, rhs = [], [], []
        WT = conv.W.T
        for j in range(sc.n2):
            row = np.zeros(ncols)
            row[:m] = WT[j]
            row[m:] = -sc.G[:, j]
            rows.append(row)
            rel.append(LE)
            rhs.append(sc.q[j])
        for irow in range(fs.A.shape[0]):
            row = np.zeros(ncols)
            row[m:] = fs.A[irow]
            rows.append(row)
            rel.append(fs.rel[irow])
            rhs.append(fs.b[irow])
        lp = LpModel(
            c, np.array(rows), rel, np.array(rhs, dtype=float),
            np.concatenate([np.zeros(m), fs.lb]),
            np.concatenate([np.full(m, pi_box), fs.ub]),
            "max",
        )
        integer = np.concatenate([np.zeros(m, dtype=bool), fs.integer_mask()])
        sol = eng.solve_milp(MilpModel(lp, integer))
        if sol.status == UNBOUNDED:
            raise ModelError("dualized subproblem unbounded; raise the pi box")
        if sol.status != OPTIMAL:
            raise ModelError(f"dualized subproblem status {sol.status}")
        pi = sol.x[:m]
        z = sol.x[m:].copy()
        return sol.obj, (float(pi @ conv.r), -(conv.T.T @ pi), z)

    return sub


def _map_scenarios(fn, nscen, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(nscen)))
    return [fn(w) for w in range(nscen)]


def run(
    inst,
    config: RegConfig = None,
    tol=1e-4,
    time_limit=3600.0,
    threads=1,
    engine=None,
    max_iterations=None,
    pi_box=1e6,
) -> RunResult:
    """Multiplier-free loop; min-max subproblems directly, min-min through
    the dualized recourse (continuous second stage only)."""
    config = config or RegConfig()
    fs = inst.first
    if inst.sense == MIN_MAX:
        oracle = _minmax_oracle(inst, engine)
    elif inst.sense == MIN_MIN:
        for sc in inst.scenarios:
            if any(k != CONTINUOUS for k in sc.ykind):
                raise ModelError(
                    "the regularized min-min path needs a continuous second "
                    "stage; use the exact convexifying driver instead"
                )
        oracle = _minmin_dual_oracle(inst, pi_box, engine)
    else:
        raise ModelError(f"unknown sense {inst.sense!r}")

    t0 = time.monotonic()
    deadline = t0 + time_limit if time_limit else None
    from .cuts import solve_master as plain_master

    x_cur, _, _ = plain_master(fs, np.zeros(fs.n), [], include_theta=False, engine=engine)
    lam_cur = np.zeros((inst.nscen, fs.n))

    lb, ub = -np.inf, np.inf
    x_best = x_cur.copy()
    cut_data = []
    logs = []
    status = OPTIMAL_RUN
    it = 0
    while True:
        it += 1
        sols = _map_scenarios(
            lambda w: oracle(x_cur, lam_cur[w], w), inst.nscen, threads
        )
        phi = float(fs.c @ x_cur) + sum(
            sc.p * (sols[w][0] - float(lam_cur[w] @ x_cur))
            for w, sc in enumerate(inst.scenarios)
        )
        if phi < ub:
            ub = phi
            x_best = x_cur.copy()
        cut_data.append([sols[w][1] for w in range(inst.nscen)])
        x_cur, theta, lam_cur, mu_cur, master_val = solve_master(
            inst, cut_data, config, engine=engine
        )
        lb = max(lb, master_val)
        logs.append(
            IterationLog(it, lb, ub, relative_gap(lb, ub), time.monotonic() - t0, len(cut_data), x_cur.copy())
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
        cuts=[],
        extras={
            "config": config,
            "cut_data": cut_data,
            "final_mu": mu_cur,
            "final_lambda": lam_cur,
            "magnitude_cap_role": "box bound on mu and |lambda| in the master",
        },
    )
