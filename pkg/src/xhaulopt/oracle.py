"""Exhaustive enumeration over every (VC, placement, path) combination.

Ground truth for small instances. Branches are cut only when the partial
assignment is already infeasible: adding flows or units never lowers a
load or a delay, so such a branch cannot recover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import vc_catalog as vcs
from .feasibility import (
    LEX_TOL,
    Assignment,
    EvalReport,
    HourContext,
    Mode,
    ResourceState,
    Solution,
    capacity_violations,
    check,
    energy_breakdown,
    evaluate,
    latency_check,
    pair_options,
    pair_sort,
)
from .phys_models import Slice
from .scenario_io import Scenario
from .vc_catalog import VC

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    """The search visited more combinations than the budget allows."""


class NoFeasible(RuntimeError):
    """No complete assignment satisfies every constraint."""


@dataclass
class EnumerationBudget:
    max_combinations: int = DEFAULT_BUDGET
    visited: int = 0
    leaves: int = 0
    feasible: int = 0

    def tick(self):
        self.visited += 1
        if self.visited > self.max_combinations:
            raise BudgetExceeded(f"more than {self.max_combinations} combinations")


@dataclass
class OracleResult:
    solution: Solution
    mode: Mode
    value: float | tuple[float, float]
    energy_wh: float
    sum_fh_us: float
    feasible_count: int
    visited: int
    report: EvalReport
    # (energy, sum FH) of every feasible solution when requested
    points: list[tuple[float, float]] = field(default_factory=list, repr=False)


def _ordered_pairs(scen: Scenario):
    return sorted(scen.pairs, key=lambda p: (list(type(p[1])).index(p[1]), p[0]))


def search_space(scen: Scenario) -> list[list[Assignment]]:
    """Per-pair option lists in enumeration order (slices outer, VC, then placement/path)."""
    space = []
    for gnb, sl in _ordered_pairs(scen):
        cell = scen.gnb(gnb).cell_node
        opts = []
        for vc in VC:
            for cu, du, mh, fh in pair_options(scen, gnb, vc):
                opts.append(Assignment(gnb, sl, vc, cu, du, cell, mh, fh))
        space.append(opts)
    return space


def space_size(scen: Scenario) -> int:
    return math.prod(len(o) for o in search_space(scen))


def enumerate_optimum(
    scen: Scenario,
    objective: Mode | str = Mode.ENERGY,
    hour: int = 0,
    budget: int = DEFAULT_BUDGET,
    collect: bool = False,
) -> OracleResult:
    mode = Mode(objective)
    ctx = HourContext(scen, hour)
    topo = scen.topology
    space = search_space(scen)
    counter = EnumerationBudget(budget)
    state = ResourceState()
    chosen: list[Assignment] = []
    points: list[tuple[float, float]] = []
    # (energy, sum_fh, encoding) of the incumbent; for the lexicographic
    # mode every leaf inside the energy window is kept.
    best: list = [None]
    window: list[tuple[float, float, tuple]] = []

    def consider(energy: float, fh: float, enc: tuple):
        if mode is Mode.LEXICOGRAPHIC:
            cur = best[0]
            if cur is None or energy < cur[0]:
                best[0] = (energy, fh, enc)
                limit = energy * (1 + LEX_TOL)
                window[:] = [w for w in window if w[0] <= limit]
            if energy <= best[0][0] * (1 + LEX_TOL):
                window.append((energy, fh, enc))
            return
        key = energy if mode is Mode.ENERGY else fh
        cur = best[0]
        if cur is None:
            best[0] = (key, enc, energy, fh)
            return
        tol = 1e-9 * max(1.0, abs(cur[0]))
        if key < cur[0] - tol or (abs(key - cur[0]) <= tol and enc < cur[1]):
            best[0] = (key, enc, energy, fh)

    last_fh: list = [None]

    def partial_ok() -> bool:
        if capacity_violations(state, topo):
            return False
        viol, fh, _ = latency_check(chosen, scen)
        last_fh[0] = fh
        return not viol

    def dfs(level: int):
        if level == len(space):
            counter.leaves += 1
            counter.feasible += 1
            total = energy_breakdown(chosen, scen, state, ctx)[0]
            fh = last_fh[0]
            sum_fh = math.fsum(fh[p].total_us for p in sorted(fh, key=pair_sort))
            enc = tuple(sorted(a.encode() for a in chosen))
            if collect:
                points.append((total, sum_fh))
            consider(total, sum_fh, enc)
            return
        for a in space[level]:
            counter.tick()
            state.add(a, ctx)
            chosen.append(a)
            if partial_ok():
                dfs(level + 1)
            chosen.pop()
            state.remove(a, ctx)

    dfs(0)
    if best[0] is None:
        raise NoFeasible(f"no feasible solution among {counter.visited} combinations")

    if mode is Mode.LEXICOGRAPHIC:
        limit = best[0][0] * (1 + LEX_TOL)
        pool = [w for w in window if w[0] <= limit]
        fmin = min(w[1] for w in pool)
        tol = 1e-9 * max(1.0, abs(fmin))
        enc = min(w[2] for w in pool if w[1] <= fmin + tol)
    else:
        enc = best[0][1]

    sol = _decode(enc, hour)
    rep = check(sol, scen)
    if not rep.ok:  # the search and the checker must agree
        raise AssertionError(f"oracle produced an infeasible solution: {rep.summary()}")
    ev = evaluate(sol, scen, skip_check=True)
    energy, sum_fh = ev.energy_wh_total, ev.sum_fh_latency_us
    if mode is Mode.ENERGY:
        value = energy
    elif mode is Mode.FH_LATENCY:
        value = sum_fh
    else:
        value = (energy, sum_fh)
    return OracleResult(sol, mode, value, energy, sum_fh, counter.feasible, counter.visited, ev, points)


def _decode(enc: tuple, hour: int) -> Solution:
    out = []
    for g, s, vc, cu, du, ru, mh, fh in enc:
        vcfg = vcs.get(vc)
        out.append(Assignment(g, Slice(s), VC(vc), cu, du, ru,
                              mh if vcs.Segment.MH in vcfg.segments else None,
                              fh if vcs.Segment.FH in vcfg.segments else None))
    return Solution(tuple(out), hour)
