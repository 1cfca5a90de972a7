"""Gomory fractional cuts read off the final simplex tableau.

Cuts are returned over the structural variables (slacks substituted out),
so a cut generated on a lifted (x, y) system is parametric in x.  The
integrality argument behind the cut requires every variable appearing in
the source row to be integer-valued at integer-feasible points; callers
are responsible for feeding integral row data (the cut's own slack is
integral by construction, so recursive rounds stay sound).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import EQ, GE, LE, OPTIMAL, _AT_LO, _AT_UP, _BASIC

_FRAC_TOL = 1e-6
_SNAP = 1e-9


class NoCut(Exception):
    """No fractional row information is available to cut with."""


@dataclass
class Cut:
    """A valid inequality coeffs' v >= rhs over structural variables."""

    coeffs: np.ndarray
    rhs: float


def _frac(a):
    f = a - np.floor(a + _SNAP)
    return 0.0 if f < _SNAP or f > 1.0 - _SNAP else f


def gomory_cut(model, solution, frac_var) -> Cut:
    """Derive a Gomory fractional cut from the tableau row of ``frac_var``.

    ``model`` supplies the bounds used in the bound-shift substitution; the
    solution may come from a solve with tighter (e.g. fixed) bounds as long
    as every nonbasic value coincides with one of the model's bounds.
    """
    if solution.status != OPTIMAL or solution._basis is None:
        raise NoCut("need an optimal basis")
    basis = solution._basis
    pos = np.flatnonzero(basis == frac_var)
    if pos.size == 0:
        raise NoCut(f"variable {frac_var} is not basic")
    r = int(pos[0])

    Aint = solution._Aint
    nss = Aint.shape[1]
    alpha = solution._binv[r, :] @ Aint  # tableau row over all columns
    beta = float(solution._col_value[frac_var])
    f0 = _frac(beta)
    if f0 <= _FRAC_TOL or f0 >= 1.0 - _FRAC_TOL:
        raise NoCut("row right-hand side is integral")

    n = solution._nstruct
    lb = np.concatenate([model.lb, np.zeros(nss - n)])
    ub = np.concatenate([model.ub, np.full(nss - n, np.inf)])
    stat = solution._col_stat
    val = solution._col_value

    coeffs = np.zeros(nss)
    rhs = f0
    for j in range(nss):
        if j == frac_var or stat[j] == _BASIC:
            continue
        a = alpha[j]
        if abs(a) < _SNAP:
            continue
        # classify against the model's bounds by value, not solve status:
        # a column fixed for the solve still shifts from its true bound
        if abs(val[j] - lb[j]) <= 1e-7:
            g = _frac(a)
            if g == 0.0:
                continue
            coeffs[j] += g
            rhs += g * lb[j]
        elif abs(val[j] - ub[j]) <= 1e-7:
            g = _frac(-a)
            if g == 0.0:
                continue
            coeffs[j] -= g
            rhs -= g * ub[j]
        else:
            raise NoCut(f"nonbasic column {j} is interior to its bounds")

    if not np.any(np.abs(coeffs) > _SNAP):
        raise NoCut("all tableau coefficients are integral")

    # substitute slack definitions to land on structural variables
    out = coeffs[:n].copy()
    rhs_out = rhs
    for i, sj in solution._slack_of_row.items():
        cs = coeffs[sj]
        if abs(cs) < _SNAP:
            continue
        arow = model.A[i]
        if model.rel[i] == LE:  # s = b - a'v
            out -= cs * arow
            rhs_out -= cs * model.b[i]
        elif model.rel[i] == GE:  # s = a'v - b
            out += cs * arow
            rhs_out += cs * model.b[i]
        else:
            raise NoCut("slack bookkeeping mismatch on an equality row")

    out[np.abs(out) < _SNAP] = 0.0
    cut = Cut(coeffs=out, rhs=rhs_out)
    violation = cut.rhs - float(out @ solution.x)
    if violation < _FRAC_TOL:
        raise NoCut(f"derived cut is not violated (slack {violation:.2e})")
    return cut
