"""Feasibility and objective evaluation shared by every solver.

A :class:`Solution` assigns each (gNB, slice) pair a virtual configuration,
CU/DU/RU nodes and the midhaul/fronthaul paths. :func:`check` lists every
violated constraint; :func:`evaluate` computes energy and latency.
"""

from __future__ import annotations

import enum
import hashlib
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from types import SimpleNamespace
from typing import Iterable, Mapping

import networkx as nx

from . import vc_catalog as vcs
from .phys_models import (
    Flow,
    FlowClass,
    Slice,
    SliceDemand,
    edge_static_us,
    function_loads,
    pp_energy_per_gops,
    pp_energy_wh,
    pp_infra_wh,
    port_power_w,
    segment_bandwidth,
    switch_energy_wh,
    transmission_delay_us,
    unit_gops,
)
from .scenario_io import Scenario, demand_at_hour
from .topology import NodeKind, Path, Topology, k_shortest_paths
from .vc_catalog import VC, Segment, Unit

Pair = tuple[int, Slice]
REL_TOL = 1e-9

SEGMENT_CLASS = {Segment.FH: FlowClass.HPF, Segment.MH: FlowClass.MPF}

# Energy is preserved within this relative slack when FH latency is optimised second.
LEX_TOL = 1e-6


class Mode(str, enum.Enum):
    ENERGY = "EnergyMin"
    FH_LATENCY = "FhLatencyMin"
    LEXICOGRAPHIC = "Lexicographic"


class InfeasibleSolution(ValueError):
    """Raised by :func:`evaluate` when the solution fails :func:`check`."""

    def __init__(self, report: "FeasibilityReport"):
        super().__init__(f"solution is infeasible: {report.summary()}")
        self.report = report


@dataclass(frozen=True, order=True)
class Assignment:
    gnb: int
    slice: Slice
    vc: VC
    cu_node: int
    du_node: int
    ru_node: int
    mh_path: Path | None = None
    fh_path: Path | None = None

    @property
    def pair(self) -> Pair:
        return (self.gnb, self.slice)

    def path(self, segment: Segment) -> Path | None:
        return self.mh_path if segment is Segment.MH else self.fh_path

    @cached_property
    def flow_ids(self) -> tuple[tuple, tuple]:
        return ((self.gnb, self.slice.value, Segment.MH.value), (self.gnb, self.slice.value, Segment.FH.value))

    @cached_property
    def _flows(self) -> tuple[Flow, ...]:
        out = []
        for i, seg in enumerate((Segment.MH, Segment.FH)):
            p = self.path(seg)
            if p:
                out.append(Flow(self.flow_ids[i], SEGMENT_CLASS[seg], p))
        return tuple(out)

    def flows(self) -> list[Flow]:
        return list(self._flows)

    def nodes(self) -> dict[Unit, int]:
        return {Unit.CU: self.cu_node, Unit.DU: self.du_node, Unit.RU: self.ru_node}

    @cached_property
    def _encoding(self) -> tuple:
        return (self.gnb, self.slice.value, int(self.vc), self.cu_node, self.du_node, self.ru_node,
                self.mh_path or (), self.fh_path or ())

    def encode(self) -> tuple:
        return self._encoding


@dataclass(frozen=True)
class Solution:
    assignments: tuple[Assignment, ...]
    hour: int = 0

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(sorted(self.assignments, key=Assignment.encode)))

    def by_pair(self) -> dict[Pair, Assignment]:
        return {a.pair: a for a in self.assignments}

    def encode(self) -> tuple:
        return tuple(a.encode() for a in self.assignments)

    def flows(self) -> list[Flow]:
        return [f for a in self.assignments for f in a.flows()]


@dataclass(frozen=True)
class Violation:
    constraint: str
    entities: tuple
    slack: float = 0.0
    message: str = ""


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def constraints(self) -> set[str]:
        return {v.constraint for v in self.violations}

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{v.constraint}{v.entities}: {v.message}" for v in self.violations[:8])


@dataclass(frozen=True)
class LatencyBreakdown:
    static_us: float = 0.0
    queuing_us: float = 0.0
    self_queuing_us: float = 0.0

    @property
    def total_us(self) -> float:
        return self.static_us + self.queuing_us + self.self_queuing_us

    def __add__(self, other: "LatencyBreakdown") -> "LatencyBreakdown":
        return LatencyBreakdown(self.static_us + other.static_us, self.queuing_us + other.queuing_us,
                                self.self_queuing_us + other.self_queuing_us)


@dataclass(frozen=True)
class EvalReport:
    energy_wh_total: float
    energy_by_node: Mapping[int, float]
    pp_dynamic_wh: float
    pp_infra_wh: float
    switch_wh: float
    fh: Mapping[Pair, LatencyBreakdown]
    mh: Mapping[Pair, LatencyBreakdown]
    gops_used: Mapping[int, float]
    pp_utilization: Mapping[int, float]
    edge_fh_mbps: Mapping[int, float]
    edge_mh_mbps: Mapping[int, float]
    active_pp: frozenset[int]
    active_sw: frozenset[int]

    def fh_latency_us(self, pair: Pair) -> float:
        return self.fh[pair].total_us

    def mh_latency_us(self, pair: Pair) -> float:
        return self.mh[pair].total_us

    def e2e_latency_us(self, pair: Pair) -> float:
        return self.fh[pair].total_us + self.mh[pair].total_us

    @property
    def sum_fh_latency_us(self) -> float:
        return math.fsum(b.total_us for _, b in sorted(self.fh.items(), key=_pair_key))

    def edge_load_mbps(self, edge: int) -> float:
        return self.edge_fh_mbps.get(edge, 0.0) + self.edge_mh_mbps.get(edge, 0.0)


def _pair_key(item):
    return pair_sort(item[0])


_SLICE_RANK = {s: i for i, s in enumerate(Slice)}


def pair_sort(pair: Pair):
    return (pair[0], _SLICE_RANK[pair[1]])


# --- candidate space -----------------------------------------------------------

def hosting_nodes(topo: Topology) -> list[int]:
    return [n.id for n in topo.pp_nodes if n.kind is not NodeKind.CELL_SITE_PP]


def cu_candidates(scen: Scenario) -> list[int]:
    return [v for v in hosting_nodes(scen.topology) if scen.topology.node(v).core_adjacent]


def placement_options(scen: Scenario, gnb: int, vc: VC) -> list[tuple[int, int]]:
    """(cu, du) node pairs allowed for ``vc`` at ``gnb``."""
    cell = scen.gnb(gnb).cell_node
    vc = VC(vc)
    out = []
    for cu in cu_candidates(scen):
        if vc in vcs.SINGLE_LOW:
            out.append((cu, cu))
        elif vc in vcs.SINGLE_HIGH:
            out.append((cu, cell))
        else:
            out.extend((cu, du) for du in hosting_nodes(scen.topology) if du != cu)
    return out


@lru_cache(maxsize=65536)
def _paths_cached(topo: Topology, a: int, b: int, k: int) -> tuple[Path, ...]:
    avoid = {topo.core.id} | {n.id for n in topo.nodes_of(NodeKind.CELL_SITE_PP)}
    try:
        return tuple(k_shortest_paths(topo, a, b, k, avoid=avoid))
    except nx.NetworkXNoPath:
        return ()


def candidate_paths(scen: Scenario, a: int, b: int, k: int | None = None) -> tuple[Path, ...]:
    """Crosshaul path candidates between two units.

    Paths never transit the core or a cell site other than their endpoints.
    """
    if a == b:
        return ((),)
    return _paths_cached(scen.topology, a, b, scen.k_paths if k is None else k)


def pair_options(scen: Scenario, gnb: int, vc: VC) -> list[tuple[int, int, Path | None, Path | None]]:
    """Every (cu, du, mh_path, fh_path) combination for one pair under ``vc``."""
    cell = scen.gnb(gnb).cell_node
    segs = vcs.segments(vc)
    out = []
    for cu, du in placement_options(scen, gnb, vc):
        mh = candidate_paths(scen, cu, du) if Segment.MH in segs else (None,)
        fh = candidate_paths(scen, du, cell) if Segment.FH in segs else (None,)
        out.extend((cu, du, m, f) for m in mh for f in fh)
    return out


def allowed_path(topo: Topology, path: Path, src: int, dst: int) -> str | None:
    """Reason ``path`` is not a valid crosshaul route from ``src`` to ``dst``, else None."""
    if not path:
        return "empty path between distinct nodes"
    try:
        seq = topo.path_nodes(path, src)
    except (KeyError, IndexError):
        return "edges are not contiguous from the source"
    if seq[-1] != dst:
        return f"path ends at {seq[-1]}, expected {dst}"
    if len(set(seq)) != len(seq):
        return "path revisits a node"
    for v in seq[1:-1]:
        kind = topo.node(v).kind
        if kind in (NodeKind.CORE, NodeKind.CELL_SITE_PP):
            return f"path transits {kind.value} node {v}"
    return None


# --- per-hour loads ---------------------------------------------------------------

class HourContext:
    """Demand-dependent quantities for one hour, memoised per (pair, vc)."""

    def __init__(self, scen: Scenario, hour: int):
        self.scen = scen
        self.hour = hour
        self.demand: dict[Pair, SliceDemand] = {(d.gnb, d.slice): d for d in demand_at_hour(scen, hour)}
        self._gops: dict[tuple, float] = {}
        self._mbps: dict[tuple, float] = {}

    def unit_gops(self, pair: Pair, vc: VC, unit: Unit) -> float:
        key = (pair, vc, unit)
        if key not in self._gops:
            rf = self.scen.gnb(pair[0]).rf
            self._gops[key] = unit_gops(vc, unit, rf, self.demand[pair], self.scen.constants.reference_table)
        return self._gops[key]

    def function_loads(self, pair: Pair, vc: VC, unit: Unit) -> tuple[float, ...]:
        key = (pair, vc, unit, "f")
        if key not in self._gops:
            rf = self.scen.gnb(pair[0]).rf
            self._gops[key] = function_loads(vc, unit, rf, self.demand[pair], self.scen.constants.reference_table)
        return self._gops[key]

    def segment_mbps(self, pair: Pair, vc: VC, seg: Segment) -> float:
        key = (pair, vc, seg)
        if key not in self._mbps:
            rf = self.scen.gnb(pair[0]).rf
            split = vcs.get(vc).split_of(seg)
            self._mbps[key] = segment_bandwidth(split, rf, self.demand[pair], self.scen.constants)
        return self._mbps[key]


# --- resource state ----------------------------------------------------------------

@dataclass
class ResourceState:
    """Reserved computing and link capacity implied by a set of assignments."""

    gops_used: dict[int, float] = field(default_factory=lambda: defaultdict(float))
    fh_mbps: dict[int, float] = field(default_factory=lambda: defaultdict(float))
    mh_mbps: dict[int, float] = field(default_factory=lambda: defaultdict(float))
    units_at: dict[int, int] = field(default_factory=lambda: defaultdict(int))
    flows_on: dict[tuple[str, int], int] = field(default_factory=lambda: defaultdict(int))

    def reserve_gops(self, node: int, gops: float):
        self.gops_used[node] += gops
        self.units_at[node] += 1

    def release_gops(self, node: int, gops: float):
        self.gops_used[node] -= gops
        self.units_at[node] -= 1
        if self.units_at[node] == 0:
            del self.units_at[node]
            del self.gops_used[node]

    def reserve_path(self, path: Path, seg: Segment, mbps: float):
        loads = self.fh_mbps if seg is Segment.FH else self.mh_mbps
        for e in path:
            loads[e] += mbps
            self.flows_on[(seg.value, e)] += 1

    def release_path(self, path: Path, seg: Segment, mbps: float):
        loads = self.fh_mbps if seg is Segment.FH else self.mh_mbps
        for e in path:
            key = (seg.value, e)
            self.flows_on[key] -= 1
            if self.flows_on[key] == 0:
                # drop the entry rather than keep a float residue
                del self.flows_on[key]
                del loads[e]
            else:
                loads[e] -= mbps

    def add(self, a: Assignment, ctx: HourContext):
        for unit, node in a.nodes().items():
            self.reserve_gops(node, ctx.unit_gops(a.pair, a.vc, unit))
        for seg in vcs.segments(a.vc):
            p = a.path(seg)
            if p:
                self.reserve_path(p, seg, ctx.segment_mbps(a.pair, a.vc, seg))

    def remove(self, a: Assignment, ctx: HourContext):
        for unit, node in a.nodes().items():
            self.release_gops(node, ctx.unit_gops(a.pair, a.vc, unit))
        for seg in vcs.segments(a.vc):
            p = a.path(seg)
            if p:
                self.release_path(p, seg, ctx.segment_mbps(a.pair, a.vc, seg))

    def edge_load(self, e: int) -> float:
        return self.fh_mbps.get(e, 0.0) + self.mh_mbps.get(e, 0.0)

    def copy(self) -> "ResourceState":
        out = ResourceState()
        for name in ("gops_used", "fh_mbps", "mh_mbps", "units_at", "flows_on"):
            getattr(out, name).update(getattr(self, name))
        return out

    def digest(self) -> str:
        parts = []
        for name in ("gops_used", "fh_mbps", "mh_mbps", "units_at", "flows_on"):
            d = getattr(self, name)
            parts.append(name + ":" + ",".join(f"{k}={d[k]!r}" for k in sorted(d)))
        return hashlib.sha256("|".join(parts).encode()).hexdigest()

    @classmethod
    def from_assignments(cls, assignments: Iterable[Assignment], ctx: HourContext) -> "ResourceState":
        st = cls()
        for a in assignments:
            st.add(a, ctx)
        return st


# --- latency -------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _edge_delays(topo: Topology, frame_bytes: float, prop_us_per_km: float, sf_us: float):
    consts = SimpleNamespace(prop_us_per_km=prop_us_per_km, sf_us=sf_us)
    static = tuple(edge_static_us(e, consts) for e in topo.edges)
    dtr = tuple(transmission_delay_us(frame_bytes, e.capacity_gbps) for e in topo.edges)
    return static, dtr


def flow_latencies(flows: list[Flow], topo: Topology, consts) -> dict:
    """Static, queuing and self-queuing delay of every flow, keyed by flow id."""
    static, dtr = _edge_delays(topo, consts.frame_bytes, consts.prop_us_per_km, consts.sf_us)
    on_edge: dict[int, list[Flow]] = defaultdict(list)
    for f in flows:
        for e in f.path:
            on_edge[e].append(f)
    out = {}
    for f in flows:
        st = q = sq = 0.0
        prev = None
        for e in f.path:
            st += static[e]
            sharing = on_edge[e]
            if len(sharing) > 1:
                d = dtr[e]
                same = mpf = 0
                for o in sharing:
                    if o is f:
                        continue
                    if o.cls is FlowClass.MPF:
                        mpf += 1
                    # same ingress port iff the other flow also crossed our previous edge
                    if o.cls is f.cls and (prev is None or prev not in o.edge_set):
                        same += 1
                sq += same * d
                if f.cls is FlowClass.HPF:
                    q += d if mpf else 0.0
                else:
                    q += d * (len(sharing) - 1)
            prev = e
        out[f.id] = LatencyBreakdown(st, q, sq)
    return out


def latency_by_pair(assignments: Iterable[Assignment], topo: Topology, consts):
    """Per-pair FH and MH :class:`LatencyBreakdown` maps."""
    assignments = list(assignments)
    flows = [f for a in assignments for f in a.flows()]
    lat = flow_latencies(flows, topo, consts)
    zero = LatencyBreakdown()
    fh, mh = {}, {}
    for a in assignments:
        ids = a.flow_ids
        fh[a.pair] = lat.get(ids[1], zero)
        mh[a.pair] = lat.get(ids[0], zero)
    return fh, mh


def latency_check(assignments: Iterable[Assignment], scen: Scenario):
    """(violations, fh, mh) for the given assignments."""
    b = scen.bounds
    fh, mh = latency_by_pair(assignments, scen.topology, scen.constants)
    out = []
    for pair in sorted(fh, key=pair_sort):
        lf, lm = fh[pair].total_us, mh[pair].total_us
        ent = (pair[0], pair[1].value)
        limit = b.slice_us[pair[1]]
        if lf + lm > limit * (1 + REL_TOL):
            out.append(Violation("lat_19", ent, limit - lf - lm, f"end-to-end {lf + lm:.3f} us > {limit} us"))
        if lm > b.mh_us * (1 + REL_TOL):
            out.append(Violation("lat_20", ent, b.mh_us - lm, f"MH {lm:.3f} us > {b.mh_us} us"))
        if lf > b.fh_us * (1 + REL_TOL):
            out.append(Violation("lat_21", ent, b.fh_us - lf, f"FH {lf:.3f} us > {b.fh_us} us"))
    return out, fh, mh


def latency_violations(assignments: Iterable[Assignment], scen: Scenario) -> list[Violation]:
    return latency_check(assignments, scen)[0]


def capacity_violations(state: ResourceState, topo: Topology) -> list[Violation]:
    out = []
    for v in sorted(state.gops_used):
        cap = topo.node(v).capacity_gops
        if state.gops_used[v] > cap * (1 + REL_TOL) + 1e-9:
            out.append(Violation("comp_2", (v,), cap - state.gops_used[v],
                                 f"{state.gops_used[v]:.3f} GOPS > {cap} GOPS"))
    for e in sorted(set(state.fh_mbps) | set(state.mh_mbps)):
        cap = topo.edge(e).capacity_gbps * 1e3
        load = state.edge_load(e)
        if load > cap * (1 + REL_TOL) + 1e-9:
            out.append(Violation("link_4", (e,), cap - load, f"{load:.3f} Mbps > {cap} Mbps"))
    return out


# --- structural checks ----------------------------------------------------------------

def structural_violations(a: Assignment, scen: Scenario) -> list[Violation]:
    topo = scen.topology
    ent = (a.gnb, a.slice.value)
    out = []
    try:
        cell = scen.gnb(a.gnb).cell_node
    except KeyError:
        return [Violation("vnf_1", ent, message="unknown gNB")]
    if a.slice not in scen.slice_shares:
        return [Violation("vnf_1", ent, message="slice not served by the scenario")]
    try:
        vc = VC(a.vc)
    except ValueError:
        return [Violation("vnf_1", ent, message=f"unknown VC {a.vc!r}")]
    n = len(topo.nodes)
    if not all(isinstance(x, int) and 0 <= x < n for x in (a.cu_node, a.du_node, a.ru_node)):
        return [Violation("vnf_3", ent, message="unit placed on an unknown node")]

    if a.ru_node != cell:
        out.append(Violation("vnf_2", ent, message=f"RU at {a.ru_node}, cell site is {cell}"))
    cu, du = topo.node(a.cu_node), topo.node(a.du_node)
    if not cu.kind.is_pp or cu.kind is NodeKind.CELL_SITE_PP or not cu.core_adjacent:
        out.append(Violation("vnf_4", ent, message=f"CU node {cu.id} is not a core-adjacent pool"))
    if not du.kind.is_pp or (du.kind is NodeKind.CELL_SITE_PP and du.id != cell):
        out.append(Violation("vnf_3", ent, message=f"DU node {du.id} cannot host units of this gNB"))
    if vc in vcs.DUAL_SPLIT and len({a.cu_node, a.du_node, a.ru_node}) != 3:
        out.append(Violation("vnf_5", ent, message="dual split needs three distinct nodes"))
    if vc in vcs.SINGLE_HIGH:
        if a.cu_node == a.ru_node:
            out.append(Violation("vnf_6", ent, message="CU colocated with RU"))
        if a.du_node != a.ru_node:
            out.append(Violation("vnf_7", ent, message="DU must sit with the RU"))
    if vc in vcs.SINGLE_LOW:
        if a.du_node == a.ru_node:
            out.append(Violation("vnf_9", ent, message="DU colocated with RU"))
        if a.cu_node != a.du_node:
            out.append(Violation("vnf_10", ent, message="CU and DU must share a node"))
    if vc not in vcs.SINGLE_HIGH and a.du_node == cell:
        out.append(Violation("vnf_9", ent, message="DU at the cell site requires VC3"))

    segs = vcs.segments(vc)
    for seg, src, dst, rows in ((Segment.MH, a.cu_node, a.du_node, ("rot_04", "rot_06")),
                                (Segment.FH, a.du_node, a.ru_node, ("rot_05", "rot_08"))):
        p = a.path(seg)
        if seg not in segs:
            if p:
                out.append(Violation(rows[0], ent, message=f"{seg.value} path given but {vc} has no {seg.value}"))
            continue
        if p is None:
            out.append(Violation(rows[0], ent, message=f"missing {seg.value} path"))
            continue
        if src == dst:
            if p:
                out.append(Violation(rows[1], ent, message=f"{seg.value} endpoints coincide but path is non-empty"))
            continue
        reason = allowed_path(topo, tuple(p), src, dst)
        if reason:
            out.append(Violation(rows[1], ent, message=f"{seg.value}: {reason}"))
    return out


def check(sol: Solution, scen: Scenario, partial: bool = False) -> FeasibilityReport:
    """Every violated constraint of ``sol`` under the demand of ``sol.hour``.

    With ``partial=True`` missing pairs are allowed, which lets search
    procedures test a prefix of the assignments.
    """
    viol: list[Violation] = []
    seen: dict[Pair, int] = defaultdict(int)
    for a in sol.assignments:
        seen[a.pair] += 1
    for pair, count in sorted(seen.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        if count > 1:
            viol.append(Violation("vnf_1", (pair[0], pair[1].value), message="pair assigned more than once"))
    if not partial:
        for pair in scen.pairs:
            if pair not in seen:
                viol.append(Violation("vnf_1", (pair[0], pair[1].value), message="pair not assigned"))
    for a in sol.assignments:
        viol.extend(structural_violations(a, scen))
    if viol:
        return FeasibilityReport(tuple(viol))

    ctx = HourContext(scen, sol.hour)
    state = ResourceState.from_assignments(sol.assignments, ctx)
    viol.extend(capacity_violations(state, scen.topology))
    viol.extend(latency_violations(sol.assignments, scen))
    return FeasibilityReport(tuple(viol))


# --- energy ---------------------------------------------------------------------------

def active_sets(assignments: Iterable[Assignment], topo: Topology) -> tuple[set[int], set[int], dict[int, int]]:
    """Active pools, active switches and active port count per switch."""
    active_pp: set[int] = set()
    used_edges: set[int] = set()
    for a in assignments:
        active_pp.update((a.cu_node, a.du_node, a.ru_node))
        for p in (a.mh_path, a.fh_path):
            if p:
                used_edges.update(p)
    ports: dict[int, int] = defaultdict(int)
    for e in used_edges:
        for v in topo.edge(e).endpoints:
            if topo.node(v).kind is NodeKind.SWITCH:
                ports[v] += 1
    return active_pp, set(ports), dict(ports)


def energy_breakdown(assignments: Iterable[Assignment], scen: Scenario, state: ResourceState, ctx: HourContext):
    """(total, per-node energy, pp dynamic, pp infra, switch) in Wh.

    Dynamic energy is summed per hosted function with ``math.fsum``, so two
    placements that host the same functions on equally efficient pools give
    bit-identical totals regardless of how the load is grouped.
    """
    topo, consts = scen.topology, scen.constants
    assignments = list(assignments)
    active_pp, active_sw, _ = active_sets(assignments, topo)
    hosted: dict[int, list[float]] = defaultdict(list)
    used_edges = set()
    for a in assignments:
        for unit, v in a.nodes().items():
            hosted[v].extend(ctx.function_loads(a.pair, a.vc, unit))
        for p in (a.mh_path, a.fh_path):
            if p:
                used_edges.update(p)
    T = consts.period_h
    per_node: dict[int, float] = {}
    dyn_terms, infra_terms, sw_terms = [], [], []
    for v in sorted(active_pp):
        node = topo.node(v)
        if state.gops_used.get(v, 0.0) <= node.capacity_gops:
            coef = pp_energy_per_gops(node, T, consts)
            d = [coef * g for g in hosted[v]]
        else:
            d = [pp_energy_wh(node, node.capacity_gops, T, consts)]
        i = pp_infra_wh(node, T, consts)
        per_node[v] = math.fsum(d + [i])
        dyn_terms += d
        infra_terms.append(i)
    for w in sorted(active_sw):
        rates: dict[float, int] = defaultdict(int)
        for nbr, e in topo.neighbors(w):
            if e in used_edges:
                rates[topo.edge(e).capacity_gbps] += 1
        val = switch_energy_wh(topo.node(w).linecards, rates, T, consts) + consts.sw_infra_w * T
        per_node[w] = val
        sw_terms.append(val)
    total = math.fsum(dyn_terms + infra_terms + sw_terms)
    return total, per_node, math.fsum(dyn_terms), math.fsum(infra_terms), math.fsum(sw_terms)


def evaluate(sol: Solution, scen: Scenario, skip_check: bool = False) -> EvalReport:
    if not skip_check:
        rep = check(sol, scen)
        if not rep.ok:
            raise InfeasibleSolution(rep)
    ctx = HourContext(scen, sol.hour)
    state = ResourceState.from_assignments(sol.assignments, ctx)
    total, per_node, dyn, infra, sw = energy_breakdown(sol.assignments, scen, state, ctx)
    fh, mh = latency_by_pair(sol.assignments, scen.topology, scen.constants)
    active_pp, active_sw, _ = active_sets(sol.assignments, scen.topology)
    topo = scen.topology
    util = {n.id: (state.gops_used.get(n.id, 0.0) / n.capacity_gops if n.capacity_gops else 0.0)
            for n in topo.pp_nodes}
    return EvalReport(
        energy_wh_total=total,
        energy_by_node=per_node,
        pp_dynamic_wh=dyn,
        pp_infra_wh=infra,
        switch_wh=sw,
        fh=fh,
        mh=mh,
        gops_used={v: state.gops_used[v] for v in sorted(state.gops_used)},
        pp_utilization=util,
        edge_fh_mbps={e: state.fh_mbps[e] for e in sorted(state.fh_mbps)},
        edge_mh_mbps={e: state.mh_mbps[e] for e in sorted(state.mh_mbps)},
        active_pp=frozenset(active_pp),
        active_sw=frozenset(active_sw),
    )


def binding_bound(report: EvalReport, scen: Scenario, pair: Pair) -> str:
    """Which latency bound is tightest (relative slack) for ``pair``."""
    b = scen.bounds
    lf, lm = report.fh_latency_us(pair), report.mh_latency_us(pair)
    slacks = {"slice": 1 - (lf + lm) / b.slice_us[pair[1]], "mh": 1 - lm / b.mh_us, "fh": 1 - lf / b.fh_us}
    return min(slacks, key=lambda k: (slacks[k], k))


def port_energy_w(topo: Topology, edge: int, consts) -> float:
    return port_power_w(topo.edge(edge).capacity_gbps, consts)
