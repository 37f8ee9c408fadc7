"""Greedy configuration heuristic with a retry loop and an energy re-placement pass.

The construction phase places every gNB-slice pair (VC choice, CU/DU nodes),
then routes its midhaul and fronthaul. A pair whose routing fails goes to the
pending set together with the tuple that failed, its computing reservation is
released, and it is configured again with that tuple excluded. Once every pair
is placed, :func:`minimize_energy` revisits the pairs hosted on the least used
pools and keeps a re-configuration only when total energy strictly drops.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import networkx as nx

from . import vc_catalog as vcs
from .feasibility import (
    Assignment,
    EvalReport,
    HourContext,
    ResourceState,
    Solution,
    candidate_paths,
    check,
    cu_candidates,
    energy_breakdown,
    evaluate,
    latency_check,
    pair_sort,
    hosting_nodes,
)
from .phys_models import Slice, edge_static_us
from .scenario_io import Scenario
from .vc_catalog import VC, Segment, Unit

Pair = tuple[int, Slice]
# (vc, cu node, du node, mh path, fh path); paths are None when routing never got that far
ConfigTuple = tuple

DEFAULT_ITERATIONS = 3

URLLC_ORDER = (VC.VC3, VC.VC1, VC.VC2, VC.VC4, VC.VC5)
MMTC_ORDER = (VC.VC3, VC.VC4, VC.VC5, VC.VC1, VC.VC2)
EMBB_LOW_ORDER = (VC.VC4, VC.VC5, VC.VC1, VC.VC2, VC.VC3)
EMBB_HIGH_ORDER = (VC.VC1, VC.VC2, VC.VC4, VC.VC5, VC.VC3)

# relative margin under which an energy change counts as no change
ENERGY_EPS = 1e-9


class Unplaceable(RuntimeError):
    """Some pairs could not be configured after every alternative was excluded."""

    def __init__(self, pending: "PendingSet"):
        self.pending = pending
        names = ", ".join(f"gNB {g}/{s.value}" for g, s in pending.pairs())
        super().__init__(f"unplaceable slices: {names}")


@dataclass
class PendingSet:
    """Pairs still to configure, each with the configurations it may not retry."""

    entries: dict[Pair, set[ConfigTuple]] = field(default_factory=dict)

    def add(self, pair: Pair, tried: ConfigTuple | None = None):
        forbidden = self.entries.setdefault(pair, set())
        if tried is not None:
            forbidden.add(tried)

    def pairs(self) -> list[Pair]:
        return sorted(self.entries, key=pair_sort)

    def forbidden(self, pair: Pair) -> set[ConfigTuple]:
        return self.entries.get(pair, set())

    def blocked(self, pair: Pair, vc: VC, cu: int, du: int) -> bool:
        return any(t[:3] == (vc, cu, du) for t in self.forbidden(pair))

    def n_forbidden(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def copy(self) -> "PendingSet":
        return PendingSet({p: set(f) for p, f in self.entries.items()})

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)


@dataclass(frozen=True)
class HeuristicParams:
    iterations: int = DEFAULT_ITERATIONS
    k_paths: int | None = None  # None: use the scenario value
    vc_priority: Mapping[Slice, tuple[VC, ...]] | None = None  # overrides the demand-based policy
    candidate_order: str = "distance-utilization"  # or "id"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.k_paths is not None and self.k_paths < 1:
            raise ValueError("k_paths must be >= 1")
        if self.candidate_order not in ("distance-utilization", "id"):
            raise ValueError(f"unknown candidate order {self.candidate_order!r}")

    @classmethod
    def from_mapping(cls, doc: Mapping | None) -> "HeuristicParams":
        doc = dict(doc or {})
        prio = doc.get("vc_priority")
        if prio is not None:
            prio = {Slice(s): tuple(VC(int(k)) for k in ks) for s, ks in prio.items()}
        return cls(iterations=int(doc.get("iterations", DEFAULT_ITERATIONS)),
                   k_paths=doc.get("k_paths"), vc_priority=prio,
                   candidate_order=doc.get("candidate_order", "distance-utilization"))


@dataclass
class HeuristicResult:
    solution: Solution
    report: EvalReport
    construction_energy_wh: float
    params: HeuristicParams
    stats: dict = field(default_factory=dict)

    @property
    def energy_wh(self) -> float:
        return self.report.energy_wh_total


class Search:
    """Mutable search state for one hour: placed assignments plus reservations."""

    def __init__(self, scen: Scenario, hour: int, params: HeuristicParams):
        self.scen = scen
        self.topo = scen.topology
        self.params = params
        self.ctx = HourContext(scen, hour)
        self.state = ResourceState()
        self.placed: dict[Pair, Assignment] = {}
        self.k = params.k_paths or scen.k_paths
        g = self.topo.to_networkx()
        self._dist = {c: nx.single_source_dijkstra_path_length(g, c, weight="length")
                      for c in {gn.cell_node for gn in scen.gnbs}}
        self._hosts = hosting_nodes(self.topo)
        self._cus = cu_candidates(scen)
        self._switches = {w.id for w in self.topo.switches}
        self.banned: set[int] = set()  # pools excluded while evacuating one
        self.stats = {"configure_calls": 0, "routing_failures": 0, "accepted_moves": 0, "rejected_moves": 0}

    # -- snapshots --------------------------------------------------------------------
    def snapshot(self):
        return dict(self.placed), self.state.copy()

    def restore(self, snap):
        placed, state = snap
        self.placed = dict(placed)
        self.state = state.copy()

    def energy(self) -> float:
        return energy_breakdown(self.placed.values(), self.scen, self.state, self.ctx)[0]

    def solution(self) -> Solution:
        return Solution(tuple(self.placed[p] for p in sorted(self.placed, key=pair_sort)), self.ctx.hour)

    # -- ordering policies --------------------------------------------------------------
    def utilization(self, v: int) -> float:
        cap = self.topo.node(v).capacity_gops
        return self.state.gops_used.get(v, 0.0) / cap if cap else 0.0

    def order_candidates(self, nodes: Iterable[int], cell: int) -> list[int]:
        """Closer to the cell site first, then more utilised, then lower id."""
        if self.params.candidate_order == "id":
            return sorted(nodes)
        dist = self._dist[cell]
        return sorted(nodes, key=lambda v: (dist.get(v, math.inf), -self.utilization(v), v))

    def vc_order(self, pair: Pair) -> tuple[VC, ...]:
        sl = pair[1]
        if self.params.vc_priority and sl in self.params.vc_priority:
            return tuple(self.params.vc_priority[sl])
        if sl is Slice.URLLC:
            return URLLC_ORDER
        if sl is Slice.MMTC:
            return MMTC_ORDER
        # eMBB: CU and DU share a pool while the DU fits comfortably, three sites otherwise
        du_load = self.ctx.unit_gops(pair, VC.VC5, Unit.DU)
        free = max((self.topo.node(v).capacity_gops - self.state.gops_used.get(v, 0.0) for v in self._hosts),
                   default=0.0)
        return EMBB_HIGH_ORDER if du_load > free / 2 else EMBB_LOW_ORDER

    # -- placement ----------------------------------------------------------------------
    def fits(self, node: int, gops: float) -> bool:
        cap = self.topo.node(node).capacity_gops
        return self.state.gops_used.get(node, 0.0) + gops <= cap * (1 + 1e-12)

    def place_unit(self, load: float, candidates: Iterable[int]) -> int | None:
        """First candidate with room for ``load``; reserves it."""
        for v in candidates:
            if self.fits(v, load):
                self.state.reserve_gops(v, load)
                return v
        return None

    def _reserve(self, pair: Pair, vc: VC, nodes: Mapping[Unit, int], sign: float = 1.0):
        for unit, v in nodes.items():
            g = self.ctx.unit_gops(pair, vc, unit)
            if sign > 0:
                self.state.reserve_gops(v, g)
            else:
                self.state.release_gops(v, g)

    def place_pair(self, pair: Pair, pending: PendingSet) -> tuple[VC, int, int] | None:
        """Choose VC, CU and DU for ``pair`` and reserve their computing load."""
        gnb = self.scen.gnb(pair[0])
        cell = gnb.cell_node
        cus = self.order_candidates(self._cus, cell)
        for vc in self.vc_order(pair):
            g = {u: self.ctx.unit_gops(pair, vc, u) for u in Unit}
            for cu in cus:
                if vc in vcs.SINGLE_LOW:
                    dus = [cu]
                elif vc in vcs.SINGLE_HIGH:
                    dus = [cell]
                else:
                    dus = self.order_candidates([v for v in self._hosts if v != cu], cell)
                if cu in self.banned:
                    continue
                for du in dus:
                    if du in self.banned or pending.blocked(pair, vc, cu, du):
                        continue
                    # total demand per node, since units may share one
                    need: dict[int, float] = {}
                    for u, v in ((Unit.CU, cu), (Unit.DU, du), (Unit.RU, cell)):
                        need[v] = need.get(v, 0.0) + g[u]
                    if all(self.fits(v, load) for v, load in need.items()):
                        self._reserve(pair, vc, {Unit.CU: cu, Unit.DU: du, Unit.RU: cell})
                        return vc, cu, du
        return None

    # -- routing ------------------------------------------------------------------------
    def ranked_paths(self, pair: Pair, vc: VC, seg: Segment, a: int, b: int) -> list:
        """Candidate paths that respect the static bound and link capacity, best first."""
        if a == b:
            return [()]
        mbps = self.ctx.segment_mbps(pair, vc, seg)
        bound = self.scen.bounds.fh_us if seg is Segment.FH else self.scen.bounds.mh_us
        out = []
        lit = self.active_switches()
        for path in candidate_paths(self.scen, a, b, self.k):
            static = sum(_static(self.topo, self.scen.constants, e) for e in path)
            if static > bound:
                continue
            if any(self.state.edge_load(e) + mbps > self.topo.edge(e).capacity_gbps * 1000.0 * (1 + 1e-12)
                   for e in path):
                continue
            flows_on = self.state.flows_on
            reuse = sum(1 for e in path if ("FH", e) in flows_on or ("MH", e) in flows_on)
            idle = sum(1 for v in self.topo.path_nodes(path, a)[1:-1] if v in self._switches and v not in lit)
            out.append((-reuse, idle, self.topo.path_length_km(path), path))
        out.sort()
        return [p for *_, p in out]

    def active_switches(self) -> set[int]:
        out = set()
        for _, e in self.state.flows_on:
            out.update(v for v in self.topo.edge(e).endpoints if v in self._switches)
        return out

    def route_segment(self, pair: Pair, vc: VC, seg: Segment, a: int, b: int):
        """Best surviving path for one segment, reserved; None when nothing survives."""
        ranked = self.ranked_paths(pair, vc, seg, a, b)
        if not ranked:
            return None
        path = ranked[0]
        if path:
            self.state.reserve_path(path, seg, self.ctx.segment_mbps(pair, vc, seg))
        return path

    def route_pair(self, pair: Pair, vc: VC, cu: int, du: int) -> Assignment | None:
        """Route MH then FH, taking the best combination that keeps every latency bound."""
        cell = self.scen.gnb(pair[0]).cell_node
        segs = vcs.segments(vc)
        mh_opts = self.ranked_paths(pair, vc, Segment.MH, cu, du) if Segment.MH in segs else [None]
        others = list(self.placed.values())
        for mh in mh_opts:
            if mh:
                self.state.reserve_path(mh, Segment.MH, self.ctx.segment_mbps(pair, vc, Segment.MH))
            fh_opts = self.ranked_paths(pair, vc, Segment.FH, du, cell) if Segment.FH in segs else [None]
            for fh in fh_opts:
                a = Assignment(pair[0], pair[1], vc, cu, du, cell, mh, fh)
                viol, _, _ = latency_check(others + [a], self.scen)
                if not viol:
                    if fh:
                        self.state.reserve_path(fh, Segment.FH, self.ctx.segment_mbps(pair, vc, Segment.FH))
                    return a
            if mh:
                self.state.release_path(mh, Segment.MH, self.ctx.segment_mbps(pair, vc, Segment.MH))
        return None

    # -- configuration ------------------------------------------------------------------
    def configure(self, targets: Iterable[Pair], pending: PendingSet | None = None) -> PendingSet:
        """Place then route ``targets``. Returns the pairs left pending.

        Targets are handled in the given order; pairs already placed are left
        alone and each routing failure forbids its tuple.
        """
        self.stats["configure_calls"] += 1
        targets = [p for p in targets if p not in self.placed]
        pending = pending.copy() if pending is not None else PendingSet()
        out = PendingSet({p: set(f) for p, f in pending.entries.items() if p not in targets})
        chosen: dict[Pair, tuple[VC, int, int]] = {}
        for pair in targets:
            pick = self.place_pair(pair, pending)
            if pick is None:
                out.add(pair)
                for t in pending.forbidden(pair):
                    out.add(pair, t)
            else:
                chosen[pair] = pick
        for pair, (vc, cu, du) in chosen.items():
            a = self.route_pair(pair, vc, cu, du)
            if a is None:
                self.stats["routing_failures"] += 1
                self._reserve(pair, vc, {Unit.CU: cu, Unit.DU: du, Unit.RU: self.scen.gnb(pair[0]).cell_node}, -1.0)
                for t in pending.forbidden(pair):
                    out.add(pair, t)
                out.add(pair, (vc, cu, du, None, None))
            else:
                self.placed[pair] = a
        return out

    def remove(self, pair: Pair):
        self.state.remove(self.placed.pop(pair), self.ctx)

    def reset(self):
        self.state = ResourceState()
        self.placed = {}

    def _build(self, order: list[Pair]) -> PendingSet:
        pending = self.configure(order)
        while pending:
            before = (pending.pairs(), pending.n_forbidden())
            nxt = self.configure(pending.pairs(), pending)
            if (nxt.pairs(), nxt.n_forbidden()) == before:
                return nxt  # nothing new to exclude: every alternative is gone
            pending = nxt
        return pending

    def construct(self) -> PendingSet:
        """Initial configuration followed by retries of pending pairs.

        When retries stall because earlier pairs hold the resources a pending
        pair needs, the construction starts over with the stuck pairs first.
        Each restart promotes at least one new pair, so there are at most
        as many restarts as pairs.
        """
        first: list[Pair] = []
        while True:
            order = first + [p for p in self.scen.pairs if p not in first]
            pending = self._build(order)
            if not pending:
                return pending
            promoted = [p for p in pending.pairs() if p not in first]
            if not promoted:
                return pending
            self.stats["restarts"] = self.stats.get("restarts", 0) + 1
            first += promoted
            self.reset()

    # -- energy minimisation ------------------------------------------------------------
    def minimize_energy(self, iterations: int, on_step: Callable | None = None) -> float:
        """Re-configure pairs hosted on the least used pools; keep strict improvements only."""
        assert iterations >= 1
        best = self.energy()
        for _ in range(iterations):
            improved = False
            active = sorted({v for a in self.placed.values() for v in (a.cu_node, a.du_node)},
                            key=lambda v: (self.utilization(v), v))
            for v in active:
                hosted = [p for p in sorted(self.placed, key=pair_sort)
                          if v in (self.placed[p].cu_node, self.placed[p].du_node)]
                if not hosted:
                    continue
                new = self._evacuate(v, hosted, best)
                if new is not None:
                    best = new
                    improved = True
                    if on_step is not None:
                        on_step(self)
                    continue
                for pair in hosted:
                    if pair not in self.placed or v not in (self.placed[pair].cu_node, self.placed[pair].du_node):
                        continue  # moved earlier in this sweep
                    new = self._improve_pair(pair, best)
                    if new is not None:
                        best = new
                        improved = True
                    if on_step is not None:
                        on_step(self)
            if not improved:
                break
        return best

    def _evacuate(self, v: int, hosted: list[Pair], current: float) -> float | None:
        """Move every pair off pool ``v`` at once so the pool can switch off."""
        snap = self.snapshot()
        for pair in hosted:
            self.remove(pair)
        self.banned = {v}
        try:
            left = self._build(hosted)
        finally:
            self.banned = set()
        new = self.energy()
        if not left and new < current - ENERGY_EPS * max(1.0, abs(current)):
            self.stats["accepted_moves"] += 1
            return new
        self.restore(snap)
        self.stats["rejected_moves"] += 1
        return None

    def _improve_pair(self, pair: Pair, current: float) -> float | None:
        """Try the pair's alternatives in policy order; keep the first that lowers energy."""
        snap = self.snapshot()
        a = self.placed[pair]
        pending = PendingSet()
        pending.add(pair, _tuple(a))
        while True:
            self.remove(pair)
            left = self.configure([pair], pending)
            if left:
                self.restore(snap)
                self.stats["rejected_moves"] += 1
                return None
            new = self.energy()
            if new < current - ENERGY_EPS * max(1.0, abs(current)):
                self.stats["accepted_moves"] += 1
                return new
            # complete but no better: exclude it and try the next alternative
            pending.add(pair, _tuple(self.placed[pair]))
            self.restore(snap)


def _tuple(a: Assignment) -> ConfigTuple:
    return (a.vc, a.cu_node, a.du_node, a.mh_path, a.fh_path)


def _static(topo, consts, e: int) -> float:
    return edge_static_us(topo.edge(e), consts)


def run(scen: Scenario, params: HeuristicParams | None = None, hour: int = 0) -> HeuristicResult:
    """Construct a configuration for ``hour``, then lower its energy."""
    params = params or HeuristicParams.from_mapping(scen.heuristic)
    t0 = time.perf_counter()
    s = Search(scen, hour, params)
    pending = s.construct()
    if pending:
        raise Unplaceable(pending)
    built = s.energy()
    t1 = time.perf_counter()
    s.minimize_energy(params.iterations)
    sol = s.solution()
    rep = check(sol, scen)
    if not rep.ok:  # would be a bug in the search bookkeeping
        raise AssertionError(f"heuristic produced an infeasible solution: {rep.summary()}")
    ev = evaluate(sol, scen, skip_check=True)
    stats = dict(s.stats, construct_s=t1 - t0, energy_s=time.perf_counter() - t1,
                 iterations=params.iterations, k_paths=s.k)
    return HeuristicResult(sol, ev, built, params, stats)


def configure(scen: Scenario, hour: int = 0, params: HeuristicParams | None = None,
              pending: PendingSet | None = None, search: Search | None = None):
    """One configuration pass. Returns (partial solution, search state, new pending set)."""
    s = search or Search(scen, hour, params or HeuristicParams())
    targets = pending.pairs() if pending else [p for p in scen.pairs if p not in s.placed]
    left = s.configure(targets, pending)
    return s.solution(), s, left
