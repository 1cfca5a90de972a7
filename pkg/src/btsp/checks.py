"""Cross-module test harness: seeded desk-scale fixtures plus executable
forms of the duality and cut-validity guarantees.

Every fixture is regenerable from its seed alone, so frozen expected
values in the test suite stay auditable.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .lp import GE, LE
from .model import (
    BINARY,
    CONTINUOUS,
    INTEGER,
    MIN_MAX,
    MIN_MIN,
    BtspInstance,
    FirstStage,
    Scenario,
    enumerate_feasible_x,
    evaluate_recourse,
)


@dataclass
class Fixture:
    seed: int
    instance: BtspInstance
    oracle_value: float = None  # filled by brute_force_solve at build time


@dataclass
class CheckRecord:
    label: str
    passed: bool
    detail: str = ""


@dataclass
class CheckReport:
    name: str
    records: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    def add(self, label, ok, detail=""):
        self.records.append(CheckRecord(label, bool(ok), detail))


def example1_instance(kind=CONTINUOUS):
    """The two-piece nonconvex expected-recourse example: three scenarios
    w in {1/3, 2/3, 1}, Q(x,w) = min (1+x)y1 + (1+3x)y2 with y1 >= x-w and
    y2 >= w-x."""
    first = FirstStage(
        n=1, c=[0.0], A=np.zeros((0, 1)), rel=[], b=[], kind=[kind],
        lb=[0.0], ub=[1.0], coupled=[0],
    )
    scen = []
    for w in (1.0 / 3.0, 2.0 / 3.0, 1.0):
        scen.append(
            Scenario(
                p=1.0 / 3.0,
                q=[1.0, 1.0],
                G=[[1.0, 3.0]],
                T=[[-1.0], [1.0]],
                W=[[1.0, 0.0], [0.0, 1.0]],
                rel=[GE, GE],
                r=[-w, w],
                ykind=[CONTINUOUS, CONTINUOUS],
                ylb=[0.0, 0.0],
                yub=[10.0, 10.0],
            )
        )
    return BtspInstance(first, scen, MIN_MIN, name="example1")


def random_minmax_instance(seed, n1_max=4, n2_max=6, nscen_max=4) -> BtspInstance:
    """Seeded min-max toy: binary x and y, integer data, knapsack-style
    recourse rows so Y(z, w) is nonempty and bounded for every z."""
    rng = np.random.default_rng(seed)
    n1 = int(rng.integers(2, n1_max + 1))
    n2 = int(rng.integers(2, n2_max + 1))
    nscen = int(rng.integers(2, nscen_max + 1))
    ncoup = int(rng.integers(1, n1 + 1))
    coupled = sorted(rng.choice(n1, size=ncoup, replace=False).tolist())
    with_t = bool(rng.random() < 0.6)  # constraint coupling on/off

    c = rng.integers(-3, 4, size=n1).astype(float)
    budget = int(np.ceil(0.75 * n1))
    first = FirstStage(
        n=n1, c=c, A=np.ones((1, n1)), rel=[LE], b=[budget],
        kind=[BINARY] * n1, lb=np.zeros(n1), ub=np.ones(n1), coupled=coupled,
    )

    scen = []
    p = 1.0 / nscen
    for _ in range(nscen):
        q = rng.integers(1, 7, size=n2).astype(float)
        G = np.zeros((n1, n2))
        for i in coupled:
            G[i] = rng.integers(-3, 4, size=n2)
        m2 = int(rng.integers(1, 3))
        W = rng.integers(1, 4, size=(m2, n2)).astype(float)
        T = np.zeros((m2, n1))
        if with_t:
            for i in coupled:
                T[:, i] = rng.integers(-2, 3, size=m2)
        # y = 0 stays feasible whatever z does to the right-hand side
        r = np.array(
            [float(rng.integers(1, int(W[k].sum()) + 2)) + np.maximum(T[k], 0).sum() for k in range(m2)]
        )
        scen.append(
            Scenario(
                p=p, q=q, G=G, T=T, W=W, rel=[LE] * m2, r=r,
                ykind=[BINARY] * n2, ylb=np.zeros(n2), yub=np.ones(n2),
            )
        )
    return BtspInstance(first, scen, MIN_MAX, name=f"mmx-{seed}")


def random_minmin_instance(seed, integer_y=False, n1_max=4, n2_max=5, nscen_max=4) -> BtspInstance:
    """Seeded min-min toy with covering-style rows; integral data so the
    cut oracle's integrality bookkeeping is sound when y is integer."""
    rng = np.random.default_rng(seed)
    n1 = int(rng.integers(2, n1_max + 1))
    n2 = int(rng.integers(2, n2_max + 1))
    nscen = int(rng.integers(2, nscen_max + 1))
    ncoup = int(rng.integers(1, n1 + 1))
    coupled = sorted(rng.choice(n1, size=ncoup, replace=False).tolist())

    c = rng.integers(0, 4, size=n1).astype(float)
    budget = int(np.ceil(0.75 * n1))
    first = FirstStage(
        n=n1, c=c, A=np.ones((1, n1)), rel=[LE], b=[budget],
        kind=[BINARY] * n1, lb=np.zeros(n1), ub=np.ones(n1), coupled=coupled,
    )

    yub_val = 3 if integer_y else 6.0
    scen = []
    p = 1.0 / nscen
    for _ in range(nscen):
        q = rng.integers(1, 6, size=n2).astype(float)
        G = np.zeros((n1, n2))
        for i in coupled:
            G[i] = rng.integers(-2, 3, size=n2)
        # keep effective costs q + G'x nonnegative so minimization is sane
        G = np.maximum(G, -np.outer(np.ones(n1), q) / max(len(coupled), 1))
        G = np.floor(G)
        for i in range(n1):
            if i not in coupled:
                G[i] = 0.0
        m2 = int(rng.integers(1, 3))
        W = rng.integers(1, 4, size=(m2, n2)).astype(float)
        T = np.zeros((m2, n1))
        for i in coupled:
            T[:, i] = rng.integers(-1, 2, size=m2)
        cap = np.array([W[k].sum() * yub_val for k in range(m2)])
        r = np.array(
            [float(rng.integers(1, max(int(cap[k] // 2), 2))) - np.maximum(-T[k], 0).sum() for k in range(m2)]
        )
        scen.append(
            Scenario(
                p=p, q=q, G=G, T=T, W=W, rel=[GE] * m2, r=r,
                ykind=[INTEGER if integer_y else CONTINUOUS] * n2,
                ylb=np.zeros(n2),
                yub=np.full(n2, float(yub_val)),
            )
        )
    return BtspInstance(first, scen, MIN_MIN, name=f"mmn-{seed}{'i' if integer_y else 'c'}")


def sample_x(first, count=16, seed=0):
    """Lattice sample of X: exhaustive when small, seeded subset otherwise."""
    pts = enumerate_feasible_x(first, guard=4096)
    if len(pts) <= max(count, 64):
        return pts
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(pts), size=count, replace=False)
    return [pts[i] for i in sorted(idx)]


def check_strong_duality(inst, sigma, samples=16, seed=0, engine=None, tol=1e-6) -> CheckReport:
    """Reformulated recourse minus sigma'x must reproduce Q(x, w) exactly
    at every sampled x once sigma meets the exactness condition."""
    from .minmax import solve_subproblem

    rep = CheckReport("strong-duality")
    sig = sigma.values
    for x in sample_x(inst.first, samples, seed):
        for w in range(inst.nscen):
            qhat, _, _ = solve_subproblem(inst, sigma, x, w, fix_z=False, engine=engine)
            dual_side = qhat - float(sig @ x)
            q = evaluate_recourse(inst, x, w, engine)
            rep.add(
                f"x={np.round(x).astype(int).tolist()} w={w}",
                abs(dual_side - q) <= tol * (1 + abs(q)),
                f"D={dual_side:.9g} Q={q:.9g}",
            )
    return rep


def check_cut_validity(inst, result, samples=16, seed=0, engine=None, tol=1e-6) -> CheckReport:
    """Every stored cut must underestimate the exact reformulated recourse
    aggregate at each sampled x."""
    from .minmax import solve_subproblem

    rep = CheckReport("cut-validity")
    sigma = result.extras["sigma"]
    for x in sample_x(inst.first, samples, seed):
        sols = [
            solve_subproblem(inst, sigma, x, w, fix_z=False, engine=engine)
            for w in range(inst.nscen)
        ]
        exact = sum(sc.p * sols[w][0] for w, sc in enumerate(inst.scenarios))
        for cut in result.cuts:
            rep.add(
                f"cut{cut.iteration}@x={np.round(x).astype(int).tolist()}",
                cut.value(x) <= exact + tol * (1 + abs(exact)),
                f"cut={cut.value(x):.9g} exact={exact:.9g}",
            )
    return rep


def junit_xml(reports, path):
    """JUnit-style summary so external tooling can consume check runs."""
    suite = ET.Element("testsuites")
    for rep in reports:
        ts = ET.SubElement(
            suite,
            "testsuite",
            name=rep.name,
            tests=str(len(rep.records)),
            failures=str(sum(not r.passed for r in rep.records)),
        )
        for rec in rep.records:
            case = ET.SubElement(ts, "testcase", name=rec.label)
            if not rec.passed:
                ET.SubElement(case, "failure", message=rec.detail or "failed")
    ET.ElementTree(suite).write(path, encoding="unicode", xml_declaration=True)
