"""Distributionally robust driver with decision-dependent moment windows.

The worst-case distribution is re-separated every iteration; an empty
ambiguity set at the incumbent is handled with a no-good feasibility cut
instead of failing, which is exactly where dual reformulations break.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cuts import (
    ALL_INFEASIBLE_RUN,
    OPTIMAL_RUN,
    TIME_LIMIT_RUN,
    UNBOUNDED_RUN,
    IterationLog,
    MasterError,
    NoGoodCut,
    OptimalityCut,
    RunResult,
    gap_closed,
    nogood_row,
    relative_gap,
    solve_master,
)
from .lp import EQ, GE, INFEASIBLE, LE, OPTIMAL, LpModel, solve_lp
from .milp import MilpModel
from .minmax import SigmaVector, _interval_bounds
from .model import CONTINUOUS, MIN_MIN, ModelError
from .regularized import L1, SQUARED_L2, RegConfig

_LEX_POLISH_LIMIT = 64
_EMPTY_TOL = 1e-7


@dataclass
class AmbiguitySet:
    """Moment box around decision-dependent first/second moments of the
    per-site demand samples."""

    demands: np.ndarray  # nscen x nsite
    mu_bar: np.ndarray
    sigma_bar: np.ndarray
    rho_m: np.ndarray  # n1 x nsite
    rho_s: np.ndarray
    eps_m: np.ndarray
    eps_s_lo: np.ndarray
    eps_s_hi: np.ndarray
    p_lo: np.ndarray = None  # optional probability box pass-through
    p_hi: np.ndarray = None

    def __post_init__(self):
        self.demands = np.asarray(self.demands, dtype=float)
        self.mu_bar = np.asarray(self.mu_bar, dtype=float)
        self.sigma_bar = np.asarray(self.sigma_bar, dtype=float)
        self.rho_m = np.asarray(self.rho_m, dtype=float)
        self.rho_s = np.asarray(self.rho_s, dtype=float)
        nsite = self.mu_bar.size
        self.eps_m = np.broadcast_to(np.asarray(self.eps_m, dtype=float), (nsite,)).copy()
        self.eps_s_lo = np.broadcast_to(np.asarray(self.eps_s_lo, dtype=float), (nsite,)).copy()
        self.eps_s_hi = np.broadcast_to(np.asarray(self.eps_s_hi, dtype=float), (nsite,)).copy()
        if np.any(self.eps_m < 0) or np.any(self.eps_s_lo <= 0) or np.any(
            self.eps_s_lo > self.eps_s_hi
        ):
            raise ModelError("moment window widths are out of order")

    @property
    def nscen(self):
        return self.demands.shape[0]

    @property
    def nsite(self):
        return self.demands.shape[1]

    def moment_samples(self):
        """zeta(w): demands then squared demands, nscen x (2 nsite)."""
        return np.hstack([self.demands, self.demands**2])

    def mean_value(self, x):
        return self.mu_bar * (1.0 + self.rho_m.T @ np.asarray(x, dtype=float))

    def second_value(self, x):
        base = self.mu_bar**2 + self.sigma_bar**2
        return base * (1.0 + self.rho_s.T @ np.asarray(x, dtype=float))

    def window(self, x):
        """(lo, hi) over the stacked moment vector at first stage x."""
        m = self.mean_value(x)
        s = self.second_value(x)
        lo = np.concatenate([m - self.eps_m, s * self.eps_s_lo])
        hi = np.concatenate([m + self.eps_m, s * self.eps_s_hi])
        return lo, hi

    def affine_window(self, n1):
        """(lo0, Lmat, hi0, Umat) with lo(x) = lo0 + Lmat x etc."""
        base2 = self.mu_bar**2 + self.sigma_bar**2
        Lm = self.rho_m * self.mu_bar[None, :]
        Ls = self.rho_s * base2[None, :]
        lo0 = np.concatenate([self.mu_bar - self.eps_m, base2 * self.eps_s_lo])
        hi0 = np.concatenate([self.mu_bar + self.eps_m, base2 * self.eps_s_hi])
        Lmat = np.hstack([Lm, Ls * self.eps_s_lo[None, :]]).T
        Umat = np.hstack([Lm, Ls * self.eps_s_hi[None, :]]).T
        return lo0, Lmat, hi0, Umat

    def contains(self, p, x, tol=1e-7):
        p = np.asarray(p, dtype=float)
        lo, hi = self.window(x)
        mom = self.moment_samples().T @ p
        ok = (
            np.all(p >= -tol)
            and abs(p.sum() - 1.0) <= tol
            and np.all(mom >= lo - tol * (1 + np.abs(lo)))
            and np.all(mom <= hi + tol * (1 + np.abs(hi)))
        )
        if ok and self.p_lo is not None:
            ok = np.all(p >= self.p_lo - tol)
        if ok and self.p_hi is not None:
            ok = np.all(p <= self.p_hi + tol)
        return bool(ok)


def build_ambiguity(
    facility_xy,
    site_xy,
    demands,
    mu_bar,
    sigma_bar,
    eps_m=25.0,
    eps_s_lo=0.1,
    eps_s_hi=1.9,
    mean_decay=25.0,
    second_decay=50.0,
) -> AmbiguitySet:
    """Distance-damped influence coefficients: opening a facility near a
    site lifts that site's demand moments by exp(-distance / decay)."""
    fac = np.asarray(facility_xy, dtype=float)
    sites = np.asarray(site_xy, dtype=float)
    dist = np.linalg.norm(fac[:, None, :] - sites[None, :, :], axis=2)
    return AmbiguitySet(
        demands=demands,
        mu_bar=mu_bar,
        sigma_bar=sigma_bar,
        rho_m=np.exp(-dist / mean_decay),
        rho_s=np.exp(-dist / second_decay),
        eps_m=eps_m,
        eps_s_lo=eps_s_lo,
        eps_s_hi=eps_s_hi,
    )


def _separation_model(amb, x, values):
    nscen = amb.nscen
    zeta = amb.moment_samples()  # nscen x 2nsite
    lo, hi = amb.window(x)
    rows, rel, rhs = [], [], []
    for m in range(zeta.shape[1]):
        rows.append(zeta[:, m])
        rel.append(GE)
        rhs.append(lo[m])
        rows.append(zeta[:, m])
        rel.append(LE)
        rhs.append(hi[m])
    rows.append(np.ones(nscen))
    rel.append(EQ)
    rhs.append(1.0)
    p_lo = amb.p_lo if amb.p_lo is not None else np.zeros(nscen)
    p_hi = amb.p_hi if amb.p_hi is not None else np.ones(nscen)
    return LpModel(
        np.asarray(values, dtype=float),
        np.array(rows),
        rel,
        np.array(rhs, dtype=float),
        p_lo,
        p_hi,
        "max",
    )


def distribution_separation(amb, x, values, lam=None, engine=None):
    """Worst-case distribution in P(x) for the given scenario values, or
    None when the set is empty; ties resolved toward low scenario indices."""
    from .backend import default_engine

    eng = engine or default_engine()
    model = _separation_model(amb, x, values)
    sol = eng.solve_lp(model)
    if sol.status == INFEASIBLE:
        return None
    if sol.status != OPTIMAL:
        raise ModelError(f"separation LP status {sol.status}")
    p = sol.x.copy()
    if amb.nscen <= _LEX_POLISH_LIMIT:
        p = _lex_polish(eng, model, sol.obj, amb.nscen)
    if not amb.contains(p, x):
        raise ModelError("separated distribution violates its own window")
    return p


def _lex_polish(eng, model, value, nscen):
    """Among the optimal faces pick the lexicographically largest p, which
    lands unit mass on the lowest-index argmax over a plain simplex."""
    A = np.vstack([model.A, model.c])
    rel = list(model.rel) + [GE]
    rhs = np.append(model.b, value - 1e-9 * (1 + abs(value)))
    lb = model.lb.copy()
    ub = model.ub.copy()
    for k in range(nscen):
        c = np.zeros(nscen)
        c[k] = 1.0
        sol = eng.solve_lp(LpModel(c, A, rel, rhs, lb, ub, "max"))
        if sol.status != OPTIMAL:
            break
        lb[k] = ub[k] = round(sol.obj, 9)
    return lb


def feasibility_cut(x, iteration=0) -> NoGoodCut:
    """No-good cut excluding exactly the binary generator point."""
    x = np.asarray(x, dtype=float)
    nogood_row(x, x.size)  # validates binariness
    return NoGoodCut(x=np.round(x), iteration=iteration)


@dataclass
class DroCut:
    """Worst-case-weighted dual minorant plus the copy term at its binary
    generator: theta >= const_dual + coef_dual'x + lam'x_gen."""

    const_dual: float
    coef_dual: np.ndarray
    generator: np.ndarray
    iteration: int

    def with_sigma(self, sig) -> OptimalityCut:
        xg = self.generator
        return OptimalityCut(
            const=self.const_dual - float(sig @ xg),
            coef=self.coef_dual + 2.0 * sig * xg,
            iteration=self.iteration,
            digest="dro",
        )


# ---------------------------------------------------------------------------
# scenario LP duals and the decomposition loops


def _require_dro_shape(inst):
    if inst.sense != MIN_MIN:
        raise ModelError("the ambiguity wraps a min-min recourse")
    for sc in inst.scenarios:
        if any(k != CONTINUOUS for k in sc.ykind):
            raise ModelError("the robust driver needs a continuous second stage")
        if np.any(np.abs(sc.G) > 1e-12):
            raise ModelError("the wrapped recourse must be single-parameterized")


def scenario_dual_cut(inst, x, w, engine=None):
    """Affine minorant of Q^s(., w) from the LP dual at x: value plus the
    dual's sensitivity -T'pi to the right-hand side."""
    from .backend import default_engine

    eng = engine or default_engine()
    sc = inst.scenarios[w]
    x = np.asarray(x, dtype=float)
    sol = eng.solve_lp(
        LpModel(sc.q, sc.W, sc.rel, sc.r - sc.T @ x, sc.ylb, sc.yub, "min")
    )
    if sol.status != OPTIMAL:
        raise ModelError(f"scenario LP status {sol.status} at {w}")
    tcoef = -(sc.T.T @ sol.duals)
    return sol.obj, tcoef


def auto_sigma(inst, amb, engine=None) -> SigmaVector:
    """Magnitude cap from the recourse value range: any reshuffling of the
    copy/distribution pair gains at most the value spread."""
    hi = -np.inf
    lo = np.inf
    for w in range(inst.nscen):
        h, l = _interval_bounds(inst, w, engine)
        hi = max(hi, h)
        lo = min(lo, l)
    vals = np.zeros(inst.first.n)
    vals[inst.first.coupled] = max(hi - lo, 0.0)
    return SigmaVector(vals, "dro-interval")


def run_l2_dro(
    inst,
    amb: AmbiguitySet,
    sigma=None,
    regularized=False,
    reg_config: RegConfig = None,
    tol=1e-4,
    time_limit=3600.0,
    engine=None,
) -> RunResult:
    """Worst-case-expectation loop: scenario LP duals, distribution
    separation at the incumbent, one aggregated cut per iteration, and
    no-good cuts whenever the window comes back empty."""
    _require_dro_shape(inst)
    if amb.nscen != inst.nscen:
        raise ModelError("scenario counts of instance and ambiguity disagree")
    if sigma is None:
        sigma = auto_sigma(inst, amb, engine)
    fs = inst.first
    sig = sigma.values
    reg_config = reg_config or RegConfig(gamma=1e-1, reg_kind=SQUARED_L2, ubar=1e4)
    t0 = time.monotonic()
    deadline = t0 + time_limit if time_limit else None

    x_cur, _, _ = solve_master(fs, np.zeros(fs.n), [], include_theta=False, engine=engine)
    lb, ub = -np.inf, np.inf
    x_best = None
    dro_cuts = []
    sigma_cuts = []
    nogoods = []
    cut_meta = []
    logs = []
    status = OPTIMAL_RUN
    n_opt_cut = 0
    it = 0
    while True:
        it += 1
        data = [scenario_dual_cut(inst, x_cur, w, engine) for w in range(inst.nscen)]
        values = np.array([d[0] for d in data])
        lam_cur = sig * (2.0 * x_cur - 1.0)
        qhat_values = values + float(sig @ x_cur)
        p_worst = distribution_separation(amb, x_cur, qhat_values, lam_cur, engine)
        if p_worst is None:
            nogoods.append(feasibility_cut(x_cur, it))
        else:
            phi = float(fs.c @ x_cur) + float(p_worst @ values)
            if phi < ub:
                ub = phi
                x_best = x_cur.copy()
            coef = np.zeros(fs.n)
            const = 0.0
            for w in range(inst.nscen):
                v, tcoef = data[w]
                coef += p_worst[w] * tcoef
                const += p_worst[w] * (v - float(tcoef @ x_cur))
            cut = DroCut(const_dual=const, coef_dual=coef, generator=x_cur.copy(), iteration=it)
            dro_cuts.append(cut)
            sigma_cuts.append(cut.with_sigma(sig))
            cut_meta.append({"p": p_worst.copy(), "x": x_cur.copy()})
            n_opt_cut += 1
        try:
            if regularized:
                x_cur, master_val = _regularized_dro_master(
                    inst, dro_cuts, nogoods, reg_config, engine
                )
            else:
                x_cur, _, master_val = solve_master(
                    fs, -sig, sigma_cuts, nogoods=nogoods, engine=engine
                )
        except MasterError:
            if ub == np.inf:
                status = ALL_INFEASIBLE_RUN
                break
            raise
        lb = max(lb, master_val)
        logs.append(
            IterationLog(it, lb, ub, relative_gap(lb, ub), time.monotonic() - t0, n_opt_cut, x_cur.copy())
        )
        if gap_closed(lb, ub, tol):
            break
        if deadline is not None and time.monotonic() > deadline:
            status = TIME_LIMIT_RUN
            break
        if it > 4 * (2 ** min(fs.n, 16)) + 16:
            raise ModelError("dro loop failed to converge within the lattice budget")
    return RunResult(
        x=x_best if x_best is not None else x_cur,
        objective=ub,
        status=status,
        logs=logs,
        cuts=[] if regularized else sigma_cuts,
        feasibility_cuts=nogoods,
        extras={
            "sigma": sigma,
            "n_opt_cut": n_opt_cut,
            "n_feas_cut": len(nogoods),
            "worst_case": cut_meta[-1]["p"] if cut_meta else None,
            "regularized": regularized,
            "dro_cuts": dro_cuts,
        },
    )


def run_dual_approach(
    inst,
    amb: AmbiguitySet,
    tol=1e-4,
    time_limit=3600.0,
    bound=1e6,
    engine=None,
) -> RunResult:
    """Benders on the dualized robust model: one multiplier block for the
    moment windows, per-scenario epigraph rows approximated by LP-dual
    minorants of the recourse.  Needs the window to be nonempty at every
    x it visits; a multiplier pinned at its box signals exactly that
    failure and the run reports unbounded."""
    from .backend import default_engine

    eng = engine or default_engine()
    _require_dro_shape(inst)
    fs = inst.first
    n = fs.n
    M = 2 * amb.nsite
    zeta = amb.moment_samples()
    lo0, Lmat, hi0, Umat = amb.affine_window(n)
    has_box = amb.p_lo is not None or amb.p_hi is not None
    p_lo = amb.p_lo if amb.p_lo is not None else np.zeros(inst.nscen)
    p_hi = amb.p_hi if amb.p_hi is not None else np.ones(inst.nscen)

    # columns: x | alo | aup | delta | (blo | bup) | palo[m,i] | paup[m,i]
    alo0 = n
    aup0 = alo0 + M
    dcol = aup0 + M
    col = dcol + 1
    if has_box:
        blo0, bup0 = col, col + inst.nscen
        col += 2 * inst.nscen
    else:
        blo0 = bup0 = None
    palo, paup = {}, {}
    for m in range(M):
        for i in range(n):
            palo[(m, i)] = col
            paup[(m, i)] = col + 1
            col += 2
    ncols = col

    c = np.zeros(ncols)
    c[:n] = fs.c
    c[alo0 : alo0 + M] = -lo0
    c[aup0 : aup0 + M] = hi0
    c[dcol] = 1.0
    if has_box:
        c[blo0 : blo0 + inst.nscen] = -p_lo
        c[bup0 : bup0 + inst.nscen] = p_hi
    for (m, i), cc in palo.items():
        c[cc] = -Lmat[m, i]
    for (m, i), cc in paup.items():
        c[cc] = Umat[m, i]

    rows, rel, rhs = [], [], []
    for irow in range(fs.A.shape[0]):
        row = np.zeros(ncols)
        row[:n] = fs.A[irow]
        rows.append(row)
        rel.append(fs.rel[irow])
        rhs.append(fs.b[irow])
    for (m, i), cc in list(palo.items()) + list(paup.items()):
        mult = alo0 + m if cc == palo[(m, i)] else aup0 + m
        # w = mult * x_i for binary x_i and mult in [0, B]
        row = np.zeros(ncols)
        row[cc] = 1.0
        row[i] = -bound
        rows.append(row)
        rel.append(LE)
        rhs.append(0.0)
        row = np.zeros(ncols)
        row[cc] = 1.0
        row[mult] = -1.0
        rows.append(row)
        rel.append(LE)
        rhs.append(0.0)
        row = np.zeros(ncols)
        row[cc] = 1.0
        row[mult] = -1.0
        row[i] = -bound
        rows.append(row)
        rel.append(GE)
        rhs.append(-bound)

    base_rows = len(rows)
    lb = np.zeros(ncols)
    ub = np.full(ncols, np.inf)
    lb[:n], ub[:n] = fs.lb, fs.ub
    ub[alo0 : aup0 + M] = bound
    lb[dcol], ub[dcol] = -bound, bound
    if has_box:
        ub[blo0 : blo0 + 2 * inst.nscen] = bound
    for cc in list(palo.values()) + list(paup.values()):
        ub[cc] = bound
    integer = np.zeros(ncols, dtype=bool)
    integer[:n] = fs.integer_mask()

    scen_rows = []  # (omega, row, rhs)
    t0 = time.monotonic()
    deadline = t0 + time_limit if time_limit else None
    lbv, ubv = -np.inf, np.inf
    x_best = None
    logs = []
    n_opt_cut = 0
    it = 0
    while True:
        it += 1
        all_rows = rows + [r for (_, r, _) in scen_rows]
        all_rel = rel + [GE] * len(scen_rows)
        all_rhs = rhs + [v for (_, _, v) in scen_rows]
        sol = eng.solve_milp(
            MilpModel(
                LpModel(c, np.array(all_rows), all_rel, np.array(all_rhs, dtype=float), lb, ub, "min"),
                integer,
            )
        )
        if sol.status == INFEASIBLE:
            raise ModelError("dual-approach master infeasible")
        if sol.status != OPTIMAL:
            raise ModelError(f"dual-approach master status {sol.status}")
        mult_level = max(
            float(sol.x[alo0 : aup0 + M].max(initial=0.0)), abs(float(sol.x[dcol]))
        )
        if mult_level >= bound * (1.0 - 1e-6):
            return RunResult(
                x=None, objective=np.nan, status=UNBOUNDED_RUN, logs=logs,
                extras={"n_opt_cut": n_opt_cut, "multiplier_level": mult_level, "bound": bound},
            )
        x_cur = sol.x[:n].copy()
        lbv = max(lbv, float(sol.obj))

        data = [scenario_dual_cut(inst, x_cur, w, engine) for w in range(inst.nscen)]
        values = np.array([d[0] for d in data])
        p_worst = distribution_separation(amb, x_cur, values, engine=engine)
        if p_worst is not None:
            cand = float(fs.c @ x_cur) + float(p_worst @ values)
            if cand < ubv:
                ubv = cand
                x_best = x_cur.copy()
        logs.append(
            IterationLog(it, lbv, ubv, relative_gap(lbv, ubv), time.monotonic() - t0, n_opt_cut, x_cur.copy())
        )
        if gap_closed(lbv, ubv, tol):
            break
        if deadline is not None and time.monotonic() > deadline:
            return RunResult(
                x=x_best, objective=ubv, status=TIME_LIMIT_RUN, logs=logs,
                extras={"n_opt_cut": n_opt_cut},
            )
        added = 0
        combo_base = (zeta @ (sol.x[aup0 : aup0 + M] - sol.x[alo0 : alo0 + M])) + sol.x[dcol]
        for w in range(inst.nscen):
            combo = float(combo_base[w])
            if has_box:
                combo += float(sol.x[bup0 + w] - sol.x[blo0 + w])
            v, tcoef = data[w]
            if combo < v - 1e-7 * (1.0 + abs(v)):
                row = np.zeros(ncols)
                row[alo0 : alo0 + M] = -zeta[w]
                row[aup0 : aup0 + M] = zeta[w]
                row[dcol] = 1.0
                if has_box:
                    row[blo0 + w] = -1.0
                    row[bup0 + w] = 1.0
                row[:n] = -tcoef
                scen_rows.append((w, row, v - float(tcoef @ x_cur)))
                added += 1
                n_opt_cut += 1
        if added == 0:
            break  # feasible multipliers at the incumbent; bounds settle
        if it > 200 + 8 * (2 ** min(n, 16)):
            raise ModelError("dual-approach loop failed to converge")
    return RunResult(
        x=x_best, objective=ubv, status=OPTIMAL_RUN, logs=logs,
        extras={"n_opt_cut": n_opt_cut, "scenario_rows": len(scen_rows)},
    )


def _regularized_dro_master(inst, cuts, nogoods, config, engine):
    """Magnitude-based master for the robust loop: scenario-independent mu
    on the coupled (binary) coordinates."""
    from .backend import default_engine

    eng = engine or default_engine()
    fs = inst.first
    n = fs.n
    idx = list(fs.coupled)
    ub_vec = config.ubar_vector(n)
    geff = config.effective_gamma
    # columns: x | theta | mu_i | w_i (mu_i x_i) | rho_i?
    mu0 = n + 1
    w0 = mu0 + len(idx)
    rho0 = w0 + len(idx)
    ncols = rho0 + (len(idx) if config.reg_kind == SQUARED_L2 else 0)

    c = np.zeros(ncols)
    c[:n] = fs.c
    c[n] = 1.0
    for k, i in enumerate(idx):
        c[w0 + k] -= 1.0
        if config.reg_kind == L1:
            c[mu0 + k] += geff
        else:
            c[rho0 + k] += geff

    rows, rel, rhs = [], [], []
    for irow in range(fs.A.shape[0]):
        row = np.zeros(ncols)
        row[:n] = fs.A[irow]
        rows.append(row)
        rel.append(fs.rel[irow])
        rhs.append(fs.b[irow])
    for k, i in enumerate(idx):
        u = ub_vec[i]
        row = np.zeros(ncols)
        row[w0 + k] = 1.0
        row[i] = -u
        rows.append(row)
        rel.append(LE)
        rhs.append(0.0)
        row = np.zeros(ncols)
        row[w0 + k] = 1.0
        row[mu0 + k] = -1.0
        rows.append(row)
        rel.append(LE)
        rhs.append(0.0)
        row = np.zeros(ncols)
        row[w0 + k] = 1.0
        row[mu0 + k] = -1.0
        row[i] = -u
        rows.append(row)
        rel.append(GE)
        rhs.append(-u)
        if config.reg_kind == SQUARED_L2:
            for t in np.linspace(0.0, u, config.pl_segments):
                row = np.zeros(ncols)
                row[rho0 + k] = 1.0
                row[mu0 + k] = -2.0 * t
                rows.append(row)
                rel.append(GE)
                rhs.append(-t * t)
    for cut in cuts:
        # theta >= const + coef_dual'x + sum_i lam_i x^k_i with the sigma
        # part of the stored cut stripped and re-expressed through mu
        row = np.zeros(ncols)
        row[n] = 1.0
        row[:n] = -cut.coef_dual
        xk = cut.generator
        for k, i in enumerate(idx):
            row[w0 + k] -= 2.0 * xk[i]
            row[mu0 + k] += xk[i]
        rows.append(row)
        rel.append(GE)
        rhs.append(cut.const_dual)
    for ng in nogoods:
        coefng, r0 = nogood_row(ng.x, n)
        row = np.zeros(ncols)
        row[:n] = coefng
        rows.append(row)
        rel.append(GE)
        rhs.append(r0)

    lb = np.zeros(ncols)
    ub = np.full(ncols, np.inf)
    lb[:n], ub[:n] = fs.lb, fs.ub
    lb[n] = -1e12
    for k, i in enumerate(idx):
        ub[mu0 + k] = ub_vec[i]
        ub[w0 + k] = ub_vec[i]
        if config.reg_kind == SQUARED_L2:
            ub[rho0 + k] = ub_vec[i] ** 2
    integer = np.zeros(ncols, dtype=bool)
    integer[:n] = fs.integer_mask()
    sol = eng.solve_milp(
        MilpModel(LpModel(c, np.array(rows), rel, np.array(rhs, dtype=float), lb, ub, "min"), integer)
    )
    if sol.status == INFEASIBLE:
        raise MasterError("regularized robust master infeasible")
    if sol.status != OPTIMAL:
        raise MasterError(f"regularized robust master status {sol.status}")
    return sol.x[:n].copy(), float(sol.obj)
