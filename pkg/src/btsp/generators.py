"""Seeded generators for the three benchmark families: facility location
with outsourcing contracts (min-min), shortest-path interdiction with
resource thresholds (min-max, stored negated so every driver minimizes),
and the robust facility location pair (instance shell + ambiguity set).

All randomness flows through one 64-bit generator per call; normals are
drawn by inverse CDF and truncated by rejection, so identical parameters
and seed reproduce identical instances bit for bit.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from .dro import build_ambiguity
from .lp import EQ, GE, LE, LpModel
from .milp import MilpModel, solve_milp
from .model import (
    BINARY,
    CONTINUOUS,
    MIN_MAX,
    MIN_MIN,
    BtspInstance,
    FirstStage,
    ModelError,
    Scenario,
)

BINIP_PRESETS = {
    20: dict(
        arc_range=(59, 78), budget=4.0, arc_cost=1.0, res_cost=2.0,
        n_res=3, res_draw=(1, 2), h=(5.0, 4.0, 3.0), s=(1.0, 2.0, 3.0), offset=3.0,
        layers=(1, 6, 6, 6, 1), keep=0.72,
    ),
    40: dict(
        arc_range=(277, 306), budget=5.0, arc_cost=1.0, res_cost=2.0,
        n_res=4, res_draw=(1, 2, 3), h=(10.0, 8.0, 6.0, 4.0), s=(1.0, 3.0, 5.0, 7.0), offset=4.0,
        layers=(1, 13, 13, 12, 1), keep=0.80,
    ),
}


def _truncated_normal(rng, mu, sd, lo, hi):
    for _ in range(10000):
        val = mu + sd * float(ndtri(rng.random()))
        if lo < val <= hi:
            return val
    raise ModelError("truncated normal rejection failed to land in range")


def _distances(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)


def generate_biflp(n_fac, n_dem, n_sup, nscen, seed, cbar=5.0) -> BtspInstance:
    """Facility location with outsourcing contracts.

    Opening a supplier contract (second first-stage block) discounts its
    per-unit delivery cost inside every scenario, which is the objective
    coupling; facility capacity rows carry the constraint coupling.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 100.0, size=(n_fac + n_dem + n_sup, 2))
    fac, dem, sup = pts[:n_fac], pts[n_fac : n_fac + n_dem], pts[n_fac + n_dem :]
    v_fd = _distances(fac, dem)
    v_sd = _distances(sup, dem)

    cap = 100.0
    budget = (5.0 * n_fac + 4.0 * n_sup) / 4.0
    q_sup = cbar + 2.0 * v_sd
    s_sup = cbar + 0.8 * v_sd

    lo_mu, hi_mu = (40, 80) if n_sup <= 5 else (50, 90)
    mu_bar = rng.integers(lo_mu, hi_mu + 1, size=n_dem).astype(float)
    demands = np.array(
        [
            [_truncated_normal(rng, mu_bar[j], mu_bar[j] / 4.0, 0.0, np.inf) for j in range(n_dem)]
            for _ in range(nscen)
        ]
    )

    n1 = n_fac + n_sup
    arow = np.concatenate([np.full(n_fac, 5.0), np.full(n_sup, 4.0)])
    first = FirstStage(
        n=n1, c=np.zeros(n1), A=arow.reshape(1, -1), rel=[LE], b=[budget],
        kind=[BINARY] * n1, lb=np.zeros(n1), ub=np.ones(n1),
        coupled=list(range(n1)),
    )

    n2 = n_fac * n_dem + n_sup * n_dem
    dmax = demands.max(axis=0)
    scen = []
    for w in range(nscen):
        q = np.concatenate([v_fd.ravel(), q_sup.ravel()])
        G = np.zeros((n1, n2))
        for k in range(n_sup):
            for j in range(n_dem):
                G[n_fac + k, n_fac * n_dem + k * n_dem + j] = -s_sup[k, j]
        rows, rel, rr = [], [], []
        Trows = []
        for j in range(n_dem):
            row = np.zeros(n2)
            row[j::n_dem] = 1.0  # every flow column into site j
            rows.append(row)
            rel.append(GE)
            rr.append(demands[w, j])
            Trows.append(np.zeros(n1))
        for i in range(n_fac):
            row = np.zeros(n2)
            row[i * n_dem : (i + 1) * n_dem] = 1.0
            t = np.zeros(n1)
            t[i] = -cap
            rows.append(row)
            rel.append(LE)
            rr.append(0.0)
            Trows.append(t)
        yub = np.concatenate(
            [np.full(n_fac * n_dem, cap), np.tile(np.ceil(dmax), n_sup)]
        )
        scen.append(
            Scenario(
                p=1.0 / nscen, q=q, G=G, T=np.array(Trows), W=np.array(rows),
                rel=rel, r=np.array(rr), ykind=[CONTINUOUS] * n2,
                ylb=np.zeros(n2), yub=yub,
            )
        )
    return BtspInstance(
        first, scen, MIN_MIN, name=f"biflp-{n_fac}x{n_dem}x{n_sup}-s{nscen}-seed{seed}"
    )


def _layered_arcs(rng, preset):
    widths = preset["layers"]
    ids = []
    nid = 0
    for wdt in widths:
        ids.append(list(range(nid, nid + wdt)))
        nid += wdt
    arcs = []
    for la, lb in zip(ids, ids[1:]):
        for u in la:
            for v in lb:
                if rng.random() < preset["keep"]:
                    arcs.append((u, v))
    nskip = int(round(0.1 * len(arcs)))
    skip_pool = [
        (u, v)
        for ia in range(len(ids) - 2)
        for u in ids[ia]
        for v in ids[ia + 2]
    ]
    if skip_pool and nskip:
        take = rng.choice(len(skip_pool), size=min(nskip, len(skip_pool)), replace=False)
        arcs += [skip_pool[t] for t in sorted(take)]
    return nid, arcs


def _resource_path_exists(n_nodes, arcs, res, thresholds):
    """Feasibility of the user's problem under the harshest thresholds."""
    na = len(arcs)
    T = np.zeros((n_nodes, na))
    for a, (u, v) in enumerate(arcs):
        T[u, a] = 1.0
        T[v, a] = -1.0
    qv = np.zeros(n_nodes)
    qv[0], qv[n_nodes - 1] = 1.0, -1.0
    rows = np.vstack([T, res])
    rel = [EQ] * n_nodes + [GE] * res.shape[0]
    rhs = np.concatenate([qv, thresholds])
    m = MilpModel(
        LpModel(np.zeros(na), rows, rel, rhs, np.zeros(na), np.ones(na), "min"),
        [True] * na,
    )
    return solve_milp(m).status == "optimal"


def generate_binip(nodes, nscen, seed, preset=None) -> BtspInstance:
    """Shortest-path interdiction with resource thresholds.

    The interdictor maximizes the expected shortest resource-feasible path
    length; stored negated (min-max over minus the length) so the solvers'
    minimization orientation applies unchanged.
    """
    if preset is None:
        if nodes not in BINIP_PRESETS:
            raise ModelError(
                f"no preset for {nodes} nodes; pass an explicit preset dict"
            )
        preset = BINIP_PRESETS[nodes]
    rng = np.random.default_rng(seed)
    lo_a, hi_a = preset["arc_range"]
    K = preset["n_res"]
    h = np.asarray(preset["h"], dtype=float)
    s = np.asarray(preset["s"], dtype=float)

    for _ in range(500):
        n_nodes, arcs = _layered_arcs(rng, preset)
        if not lo_a <= len(arcs) <= hi_a:
            continue
        na = len(arcs)
        res = rng.choice(preset["res_draw"], size=(K, na)).astype(float)
        if _resource_path_exists(n_nodes, arcs, res, h + s):
            break
    else:
        raise ModelError("could not draw a feasible interdiction network")

    c_arc = rng.integers(1, 11, size=na).astype(float)
    dbar = rng.integers(2, 9, size=na).astype(float)
    off = preset["offset"]
    dmat = np.array(
        [[rng.uniform(dbar[a] - off, dbar[a] + off) for a in range(na)] for _ in range(nscen)]
    )

    n1 = na + K
    arow = np.concatenate([np.full(na, preset["arc_cost"]), np.full(K, preset["res_cost"])])
    first = FirstStage(
        n=n1, c=np.zeros(n1), A=arow.reshape(1, -1), rel=[LE], b=[preset["budget"]],
        kind=[BINARY] * n1, lb=np.zeros(n1), ub=np.ones(n1), coupled=list(range(n1)),
    )

    Tinc = np.zeros((n_nodes, na))
    for a, (u, v) in enumerate(arcs):
        Tinc[u, a] = 1.0
        Tinc[v, a] = -1.0
    qv = np.zeros(n_nodes)
    qv[0], qv[n_nodes - 1] = 1.0, -1.0

    scen = []
    for w in range(nscen):
        G = np.zeros((n1, na))
        for a in range(na):
            G[a, a] = -dmat[w, a]  # interdicted arcs get longer; negated form
        Trows = np.vstack([np.zeros((n_nodes, n1)), np.zeros((K, n1))])
        for k in range(K):
            Trows[n_nodes + k, na + k] = -s[k]
        W = np.vstack([Tinc, res])
        rel = [EQ] * n_nodes + [GE] * K
        rr = np.concatenate([qv, h])
        scen.append(
            Scenario(
                p=1.0 / nscen, q=-c_arc, G=G, T=Trows, W=W, rel=rel, r=rr,
                ykind=[BINARY] * na, ylb=np.zeros(na), yub=np.ones(na),
            )
        )
    inst = BtspInstance(
        first, scen, MIN_MAX, name=f"binip-{nodes}n-{na}a-s{nscen}-seed{seed}"
    )
    inst.arcs = arcs
    inst.n_nodes = n_nodes
    return inst


def generate_drflp(n_fac, n_dem, budget, nscen, seed, penalty=None):
    """Robust facility location shell plus its decision-dependent moment
    ambiguity set; unmet demand is bought out at a penalty."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 100.0, size=(n_fac + n_dem, 2))
    fac, dem = pts[:n_fac], pts[n_fac:]
    cmat = _distances(fac, dem)
    cap = 500.0

    d_lo = int(round(0.7 * budget * cap / n_dem))
    d_hi = int(round(budget * cap / n_dem))
    mu_bar = rng.integers(d_lo, d_hi + 1, size=n_dem).astype(float)
    sd = 0.8 * mu_bar
    demands = np.array(
        [
            [_truncated_normal(rng, mu_bar[j], sd[j], 1.0, 300.0) for j in range(n_dem)]
            for _ in range(nscen)
        ]
    )
    q_pen = np.asarray(penalty, dtype=float) if penalty is not None else 2.0 * cmat.max(axis=0)
    q_pen = np.broadcast_to(q_pen, (n_dem,)).astype(float)

    first = FirstStage(
        n=n_fac, c=np.zeros(n_fac), A=np.ones((1, n_fac)), rel=[LE], b=[float(budget)],
        kind=[BINARY] * n_fac, lb=np.zeros(n_fac), ub=np.ones(n_fac),
        coupled=list(range(n_fac)),
    )

    n2 = n_fac * n_dem + n_dem
    scen = []
    for w in range(nscen):
        q = np.concatenate([cmat.ravel(), q_pen])
        rows, rel, rr, Trows = [], [], [], []
        for j in range(n_dem):
            row = np.zeros(n2)
            row[j : n_fac * n_dem : n_dem] = 1.0
            row[n_fac * n_dem + j] = 1.0
            rows.append(row)
            rel.append(GE)
            rr.append(demands[w, j])
            Trows.append(np.zeros(n_fac))
        for i in range(n_fac):
            row = np.zeros(n2)
            row[i * n_dem : (i + 1) * n_dem] = 1.0
            t = np.zeros(n_fac)
            t[i] = -cap
            rows.append(row)
            rel.append(LE)
            rr.append(0.0)
            Trows.append(t)
        yub = np.concatenate([np.full(n_fac * n_dem, cap), np.full(n_dem, 300.0)])
        scen.append(
            Scenario(
                p=1.0 / nscen, q=q, G=np.zeros((n_fac, n2)), T=np.array(Trows),
                W=np.array(rows), rel=rel, r=np.array(rr),
                ykind=[CONTINUOUS] * n2, ylb=np.zeros(n2), yub=yub,
            )
        )
    inst = BtspInstance(
        first, scen, MIN_MIN, name=f"drflp-{n_fac}x{n_dem}-b{budget}-s{nscen}-seed{seed}"
    )
    amb = build_ambiguity(fac, dem, demands, mu_bar, sd)
    return inst, amb
