"""Pluggable solve backend.

Anything exposing ``solve_lp(model)`` and ``solve_milp(model, **kw)`` with
the contracts of :mod:`btsp.lp` / :mod:`btsp.milp` can replace the built-in
engine (the built-in one is the reference implementation).
"""

from __future__ import annotations

from . import lp as _lp
from . import milp as _milp


class BuiltinEngine:
    name = "builtin-simplex"

    def solve_lp(self, model, **kw):
        return _lp.solve_lp(model, **kw)

    def solve_milp(self, model, **kw):
        return _milp.solve_milp(model, **kw)


_DEFAULT = BuiltinEngine()


def default_engine():
    return _DEFAULT
