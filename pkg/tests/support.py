"""Shared test helpers: row interval evaluation and an audited heuristic search."""

from __future__ import annotations

import math

import numpy as np

from xhaulopt.feasibility import ResourceState
from xhaulopt.heuristic import Search
from xhaulopt.milp import Sense


def row_bounds(row, x, var):
    """Interval of ``var`` allowed by ``row`` with every other variable fixed at ``x``."""
    a = row.expr.terms[var]
    rest = sum(c * x[k] for k, c in row.expr.terms.items() if k != var)
    val = (row.rhs - rest) / a
    lo, hi = -np.inf, np.inf
    if row.sense is Sense.EQ:
        return val, val
    if (row.sense is Sense.LE) == (a > 0):
        hi = val
    else:
        lo = val
    return lo, hi


def interval(model, var, x, rows):
    v = model.variables[var]
    lo, hi = v.lb, v.ub
    for r in rows:
        rl, rh = row_bounds(r, x, var)
        lo, hi = max(lo, rl), min(hi, rh)
    return lo, hi


class Audited(Search):
    """Checks that every rejected improvement step restores the exact prior state."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.rollbacks = 0

    def fingerprint(self):
        return self.state.digest(), tuple(sorted(a.encode() for a in self.placed.values()))

    def _evacuate(self, v, hosted, current):
        before = self.fingerprint()
        out = super()._evacuate(v, hosted, current)
        if out is None:
            assert self.fingerprint() == before
            self.rollbacks += 1
        return out

    def _improve_pair(self, pair, current):
        before = self.fingerprint()
        out = super()._improve_pair(pair, current)
        if out is None:
            assert self.fingerprint() == before
            self.rollbacks += 1
        return out


def loads_match(s):
    """Reservations held by the search equal those implied by its placements."""
    implied = ResourceState.from_assignments(s.placed.values(), s.ctx)
    for name in ("gops_used", "fh_mbps", "mh_mbps"):
        got, want = getattr(s.state, name), getattr(implied, name)
        assert set(got) == set(want), name
        for k in want:
            assert math.isclose(got[k], want[k], rel_tol=1e-9, abs_tol=1e-9)
    assert dict(s.state.flows_on) == dict(implied.flows_on)
    assert dict(s.state.units_at) == dict(implied.units_at)
