"""Scenario documents: loading, validation, hourly demand and a synthetic generator."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .phys_models import RfConfig, ScenarioConstants, Slice, SliceDemand
from .topology import NodeKind, Topology, TopologyError, load_topology

SCHEMA_VERSION = 1
DEFAULT_SHARES = {Slice.EMBB: 0.70, Slice.URLLC: 0.25, Slice.MMTC: 0.05}
DEFAULT_K_PATHS = 4

# Normalised daily traffic profile (hour 0 .. 23), night trough and evening peak.
DEFAULT_PATTERN = (
    0.55, 0.40, 0.30, 0.24, 0.22, 0.22, 0.28, 0.40, 0.55, 0.66, 0.72, 0.76,
    0.80, 0.80, 0.78, 0.78, 0.82, 0.88, 0.94, 0.98, 1.00, 0.96, 0.85, 0.70,
)

# RU radio profiles with the share of RUs that use them.
RF_PROFILES = {
    "nr100": {"bw_mhz": 100, "modulation": 264, "layers": 8, "coding_rate": 1 / 3,
              "prb": 273, "numerology": 1, "subcarriers": 3276},
    "nr40": {"bw_mhz": 40, "modulation": 64, "layers": 4, "coding_rate": 3 / 4,
             "prb": 100, "numerology": 1, "subcarriers": 1200},
    "nr20": {"bw_mhz": 20, "modulation": 64, "layers": 4, "coding_rate": 2 / 3,
             "prb": 100, "numerology": 0, "subcarriers": 1200},
}
RF_MIX = {"nr100": 0.5, "nr40": 0.4, "nr20": 0.1}
NOMINAL_PEAK_MBPS = {"nr100": 1200.0, "nr40": 500.0, "nr20": 200.0}


class ScenarioError(ValueError):
    """Schema or invariant violation in a scenario document."""


@dataclass(frozen=True)
class LatencyBounds:
    fh_us: float = 250.0
    mh_us: float = 10_000.0
    slice_us: Mapping[Slice, float] = field(default_factory=lambda: {
        Slice.EMBB: 10_000.0, Slice.URLLC: 250.0, Slice.MMTC: 10_000.0})


@dataclass(frozen=True)
class Gnb:
    id: int
    cell_node: int
    rf_profile: str
    rf: RfConfig
    peak_mbps: float


@dataclass(frozen=True)
class Scenario:
    name: str
    topology: Topology
    constants: ScenarioConstants
    gnbs: tuple[Gnb, ...]
    slice_shares: Mapping[Slice, float]
    hourly_pattern: tuple[float, ...]
    bounds: LatencyBounds
    k_paths: int = DEFAULT_K_PATHS
    heuristic: Mapping[str, Any] = field(default_factory=dict)
    document: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def slices(self) -> tuple[Slice, ...]:
        return tuple(s for s in Slice if s in self.slice_shares)

    @property
    def pairs(self) -> list[tuple[int, Slice]]:
        return [(g.id, s) for g in self.gnbs for s in self.slices]

    def gnb(self, gnb_id: int) -> Gnb:
        for g in self.gnbs:
            if g.id == gnb_id:
                return g
        raise KeyError(gnb_id)

    @property
    def rf_configs(self) -> dict[int, RfConfig]:
        return {g.id: g.rf for g in self.gnbs}

    @property
    def peak_demand(self) -> dict[int, float]:
        return {g.id: g.peak_mbps for g in self.gnbs}

    @property
    def digest(self) -> str:
        return scenario_hash(self.document)


def scenario_hash(doc: Mapping[str, Any]) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_scenario(doc: Mapping[str, Any] | str | Path) -> Scenario:
    """Validate a scenario mapping (or a path to a JSON file) into a :class:`Scenario`."""
    if isinstance(doc, (str, Path)):
        with open(doc) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{doc}: not valid JSON ({exc})") from None
    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario document must be a mapping")
    doc = copy.deepcopy(dict(doc))

    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version}")
    for key in ("topology", "gnbs"):
        if key not in doc:
            raise ScenarioError(f"missing section {key!r}")

    try:
        constants = ScenarioConstants.from_dict(doc.get("constants"))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"constants: {exc}") from None
    try:
        topo = load_topology(doc["topology"], per_cpu_gops=constants.per_cpu_gops)
    except TopologyError as exc:
        raise ScenarioError(f"topology: {exc}") from None

    profiles = {**RF_PROFILES, **(doc.get("rf_profiles") or {})}
    gnbs = []
    seen_cells = set()
    for raw in doc["gnbs"]:
        try:
            gid, cell, prof = int(raw["id"]), int(raw["cell_node"]), str(raw["rf_profile"])
            peak = float(raw["peak_mbps"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"gnb entry {raw!r}: {exc}") from None
        if prof not in profiles:
            raise ScenarioError(f"gnb {gid}: unknown rf_profile {prof!r}")
        if not 0 <= cell < len(topo.nodes) or topo.node(cell).kind is not NodeKind.CELL_SITE_PP:
            raise ScenarioError(f"gnb {gid}: cell_node {cell} is not a CellSitePP")
        if cell in seen_cells:
            raise ScenarioError(f"cell site {cell} serves more than one gNB")
        if peak < 0:
            raise ScenarioError(f"gnb {gid}: negative peak demand")
        seen_cells.add(cell)
        try:
            rf = RfConfig.from_profile(profiles[prof])
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"rf_profile {prof!r}: {exc}") from None
        gnbs.append(Gnb(gid, cell, prof, rf, peak))
    if len({g.id for g in gnbs}) != len(gnbs):
        raise ScenarioError("duplicate gNB ids")
    unmapped = {n.id for n in topo.nodes_of(NodeKind.CELL_SITE_PP)} - seen_cells
    if unmapped:
        raise ScenarioError(f"cell sites without a gNB: {sorted(unmapped)}")

    raw_shares = doc.get("slice_shares", {s.value: v for s, v in DEFAULT_SHARES.items()})
    if isinstance(raw_shares, (list, tuple)):
        raw_shares = dict(zip([s.value for s in Slice], raw_shares))
    try:
        shares = {Slice(k): float(v) for k, v in raw_shares.items()}
    except ValueError as exc:
        raise ScenarioError(f"slice_shares: {exc}") from None
    if any(v < 0 for v in shares.values()) or not math.isclose(sum(shares.values()), 1.0, abs_tol=1e-9):
        raise ScenarioError("slice shares must be non-negative and sum to 1")

    pattern = tuple(float(x) for x in doc.get("hourly_pattern", DEFAULT_PATTERN))
    if len(pattern) != 24:
        raise ScenarioError(f"hourly_pattern needs 24 values, got {len(pattern)}")
    if any(not 0.0 <= x <= 1.0 for x in pattern):
        raise ScenarioError("hourly_pattern values must lie in [0, 1]")

    rb = doc.get("latency_bounds") or {}
    slice_us = dict(LatencyBounds().slice_us)
    for k, v in (rb.get("slice_us") or {}).items():
        slice_us[Slice(k)] = float(v)
    bounds = LatencyBounds(float(rb.get("fh_us", 250.0)), float(rb.get("mh_us", 10_000.0)), slice_us)

    k_paths = int(doc.get("k_paths", DEFAULT_K_PATHS))
    if k_paths < 1:
        raise ScenarioError("k_paths must be >= 1")

    return Scenario(
        name=str(doc.get("name", "scenario")),
        topology=topo,
        constants=constants,
        gnbs=tuple(sorted(gnbs, key=lambda g: g.id)),
        slice_shares=shares,
        hourly_pattern=pattern,
        bounds=bounds,
        k_paths=k_paths,
        heuristic=dict(doc.get("heuristic") or {}),
        document=doc,
    )


def demand_at_hour(scen: Scenario, hour: int) -> list[SliceDemand]:
    if not 0 <= hour <= 23:
        raise ValueError("hour must be in 0..23")
    level = scen.hourly_pattern[hour]
    return [
        SliceDemand(g.id, s, g.peak_mbps * level * scen.slice_shares[s], hour, g.peak_mbps)
        for g in scen.gnbs
        for s in scen.slices
    ]


def distinct_hours(scen: Scenario, hours) -> dict[int, int]:
    """Map each hour to the first hour with the same pattern value."""
    first: dict[float, int] = {}
    out = {}
    for h in hours:
        out[h] = first.setdefault(scen.hourly_pattern[h], h)
    return out


def hierarchical_topology_doc() -> dict:
    """16-node tree: core, one regional pool, aggregation switches, hub pools, six cell sites."""
    nodes = [
        {"id": 0, "kind": "Core", "name": "5gc"},
        {"id": 1, "kind": "RegionalPP", "cpus": 5, "name": "regional"},
        {"id": 2, "kind": "Switch", "name": "agg"},
        {"id": 3, "kind": "Switch", "name": "pre-agg-a"},
        {"id": 4, "kind": "Switch", "name": "pre-agg-b"},
        {"id": 5, "kind": "EdgePP", "cpus": 2, "name": "hub-a1"},
        {"id": 6, "kind": "EdgePP", "cpus": 2, "name": "hub-a2"},
        {"id": 7, "kind": "EdgePP", "cpus": 2, "name": "hub-b1"},
        {"id": 8, "kind": "EdgePP", "cpus": 2, "name": "hub-b2"},
        {"id": 9, "kind": "EdgePP", "cpus": 5, "name": "hub-agg"},
    ] + [{"id": i, "kind": "CellSitePP", "cpus": 2, "name": f"cell-{i - 9}"} for i in range(10, 16)]
    # capacities: router-router 100, router-PP 200, PP-PP 200, PP-RU 25 Gbps
    edges = [
        (0, 1, 200, 0.5),
        (1, 2, 200, 5.0),
        (2, 3, 100, 8.0),
        (2, 4, 100, 10.0),
        (3, 5, 200, 2.0),
        (3, 6, 200, 3.0),
        (4, 7, 200, 2.0),
        (4, 8, 200, 2.5),
        (2, 9, 200, 1.0),
        (5, 10, 25, 1.5),
        (5, 11, 25, 2.0),
        (6, 12, 25, 1.0),
        (7, 13, 25, 2.0),
        (8, 14, 25, 1.5),
        (8, 15, 25, 3.0),
    ]
    return {
        "nodes": nodes,
        "edges": [{"a": a, "b": b, "capacity_gbps": c, "length_km": l} for a, b, c, l in edges],
    }


def _mix_counts(n: int, mix: Mapping[str, float]) -> dict[str, int]:
    raw = {k: n * v for k, v in mix.items()}
    counts = {k: int(math.floor(v)) for k, v in raw.items()}
    rest = n - sum(counts.values())
    for k in sorted(raw, key=lambda k: (-(raw[k] - counts[k]), k))[:rest]:
        counts[k] += 1
    return counts


def generate_scenario(seed: int = 0, name: str = "hierarchical", topology: dict | None = None,
                      pattern=DEFAULT_PATTERN, k_paths: int = DEFAULT_K_PATHS) -> dict:
    """Synthetic scenario document on the hierarchical topology.

    RF profiles follow the 50/40/10 mix; peaks are drawn around each
    profile's nominal rate.
    """
    rng = np.random.default_rng(seed)
    topology = topology or hierarchical_topology_doc()
    cells = [n["id"] for n in topology["nodes"] if n["kind"] == "CellSitePP"]
    counts = _mix_counts(len(cells), RF_MIX)
    profiles = [p for p in RF_MIX for _ in range(counts[p])]
    order = rng.permutation(len(profiles))
    gnbs = []
    for gid, cell in enumerate(cells):
        prof = profiles[order[gid]]
        peak = NOMINAL_PEAK_MBPS[prof] * float(rng.uniform(0.6, 1.0))
        gnbs.append({"id": gid, "cell_node": cell, "rf_profile": prof, "peak_mbps": round(peak, 3)})
    return {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "topology": topology,
        "constants": {},
        "rf_profiles": RF_PROFILES,
        "gnbs": gnbs,
        "slice_shares": {s.value: v for s, v in DEFAULT_SHARES.items()},
        "hourly_pattern": list(pattern),
        "latency_bounds": {"fh_us": 250.0, "mh_us": 10_000.0,
                           "slice_us": {"eMBB": 10_000.0, "URLLC": 250.0, "mMTC": 10_000.0}},
        "k_paths": k_paths,
    }
