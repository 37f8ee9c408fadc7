"""Computing-load, crosshaul bandwidth, TSN latency and energy models.

Everything here is a pure function of its arguments. Units follow the
names: ``_gops``, ``_mbps``, ``_us`` (microseconds), ``_wh``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Any, Iterable, Mapping

from .topology import Edge, Node
from .vc_catalog import FunctionalSplit, RanFunction, Unit, split_functions

# QAM order -> bits per symbol. "264" appears in published RU tables and is read as 256-QAM.
QAM_BITS = {2: 1, 4: 2, 16: 4, 64: 6, 256: 8, 264: 8, 1024: 10}


class Slice(str, enum.Enum):
    EMBB = "eMBB"
    URLLC = "URLLC"
    MMTC = "mMTC"


class FlowClass(str, enum.Enum):
    HPF = "HPF"  # fronthaul
    MPF = "MPF"  # midhaul


@dataclass(frozen=True)
class RfConfig:
    bw_mhz: float
    mod_order: int  # bits per symbol
    layers: int
    coding_rate: float
    prb: int
    numerology_mu: int
    subcarriers: int
    antennas: int

    def __post_init__(self):
        if not 0 < self.coding_rate <= 1:
            raise ValueError("coding_rate must be in (0, 1]")
        if self.layers > self.antennas:
            raise ValueError("layers cannot exceed antennas")
        if self.bw_mhz <= 0 or self.mod_order <= 0 or self.layers <= 0 or self.prb <= 0:
            raise ValueError("RF parameters must be positive")

    @classmethod
    def from_profile(cls, raw: Mapping[str, Any]) -> "RfConfig":
        if "mod_order" in raw:
            bits = int(raw["mod_order"])
        else:
            qam = int(raw["modulation"])
            if qam not in QAM_BITS:
                raise ValueError(f"unsupported modulation {qam}")
            bits = QAM_BITS[qam]
        layers = int(raw["layers"])
        return cls(
            bw_mhz=float(raw["bw_mhz"]),
            mod_order=bits,
            layers=layers,
            coding_rate=float(raw.get("coding_rate", 1.0)),
            prb=int(raw["prb"]),
            numerology_mu=int(raw.get("numerology", raw.get("numerology_mu", 0))),
            subcarriers=int(raw.get("subcarriers", 12 * int(raw["prb"]))),
            antennas=int(raw.get("antennas", layers)),
        )


DEFAULT_C_REF = {
    RanFunction.RF: 10.0,
    RanFunction.LPHY: 15.0,
    RanFunction.HPHY: 60.0,
    RanFunction.MAC: 8.0,
    RanFunction.RLC: 2.0,
    RanFunction.PDCP: 2.0,
    RanFunction.RRC: 1.0,
}


@dataclass(frozen=True)
class ReferenceTable:
    """Per-function GOPS at a reference carrier (bandwidth, antennas, load, modulation)."""

    c_ref: Mapping[RanFunction, float] = field(default_factory=lambda: dict(DEFAULT_C_REF))
    bw_ref: float = 20.0
    a_ref: float = 4.0
    l_ref: float = 1.0
    m_ref: float = 6.0

    def __post_init__(self):
        if any(v <= 0 for v in self.c_ref.values()) or min(self.bw_ref, self.a_ref, self.l_ref, self.m_ref) <= 0:
            raise ValueError("reference values must be positive")
        if set(self.c_ref) != set(RanFunction):
            raise ValueError("c_ref must define every RAN function")

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ReferenceTable":
        kw = {k: float(raw[k]) for k in ("bw_ref", "a_ref", "l_ref", "m_ref") if k in raw}
        c_ref = dict(DEFAULT_C_REF)
        for name, val in (raw.get("c_ref") or {}).items():
            c_ref[RanFunction(name)] = float(val)
        return cls(c_ref=c_ref, **kw)

    def to_dict(self) -> dict:
        return {"c_ref": {f.value: v for f, v in self.c_ref.items()}, "bw_ref": self.bw_ref,
                "a_ref": self.a_ref, "l_ref": self.l_ref, "m_ref": self.m_ref}


@dataclass(frozen=True)
class ScenarioConstants:
    per_cpu_gops: float = 864.0
    w_full: float = 343.0
    w_idle: float = 52.4
    w_chassis: float = 940.0
    w_linecard: float = 1170.0
    w_port: float = 3.5
    w_port_by_rate: Mapping[float, float] = field(default_factory=dict)
    pp_infra_w_per_cpu: float | None = None  # None: idle draw per CPU
    sw_infra_w: float = 0.0
    period_h: float = 1.0
    frame_bytes: int = 1542
    prop_us_per_km: float = 5.0
    sf_us: float = 5.0
    cr_fraction: float = 0.10
    overhead_c: float = 0.10
    n_mant: int = 14
    n_ex: int = 4
    reference_table: ReferenceTable = field(default_factory=ReferenceTable)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any] | None) -> "ScenarioConstants":
        raw = dict(raw or {})
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown constants: {sorted(unknown)}")
        if "reference_table" in raw:
            raw["reference_table"] = ReferenceTable.from_dict(raw["reference_table"])
        if "w_port_by_rate" in raw:
            raw["w_port_by_rate"] = {float(k): float(v) for k, v in raw["w_port_by_rate"].items()}
        return cls(**raw)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["reference_table"] = self.reference_table.to_dict()
        out["w_port_by_rate"] = {str(k): v for k, v in self.w_port_by_rate.items()}
        return out

    def replace(self, **kw) -> "ScenarioConstants":
        return replace(self, **kw)


@dataclass(frozen=True)
class SliceDemand:
    gnb: int
    slice: Slice
    rate_mbps: float
    hour: int = 0
    peak_mbps: float = 0.0  # aggregated gNB peak the load fraction is measured against

    @property
    def load_fraction(self) -> float:
        if self.peak_mbps <= 0:
            return 0.0
        return min(1.0, self.rate_mbps / self.peak_mbps)


# --- computing -------------------------------------------------------------

def function_gops(f: RanFunction, rf: RfConfig, load_fraction: float, ref: ReferenceTable) -> float:
    """GOPS needed by one RAN function for one slice."""
    if not 0.0 <= load_fraction <= 1.0:
        raise ValueError("load_fraction must lie in [0, 1]")
    f = RanFunction(f)
    c = ref.c_ref[f]
    bw = rf.bw_mhz / ref.bw_ref
    a = rf.antennas / ref.a_ref
    load = load_fraction / ref.l_ref
    m = rf.mod_order / ref.m_ref
    if f is RanFunction.RF:
        return c * bw * a
    if f is RanFunction.LPHY:
        return c * bw * a * load
    if f is RanFunction.HPHY:
        return c * bw * a * a * load
    if f is RanFunction.MAC:
        return c * bw * a * m * load
    return c * a  # RLC, PDCP, RRC


def function_loads(vc, unit: Unit, rf: RfConfig, demand: SliceDemand, ref: ReferenceTable) -> tuple[float, ...]:
    """GOPS of each function ``unit`` hosts under ``vc``, in function order."""
    return tuple(function_gops(f, rf, demand.load_fraction, ref) for f in sorted(split_functions(vc, unit)))


def unit_gops(vc, unit: Unit, rf: RfConfig, demand: SliceDemand, ref: ReferenceTable) -> float:
    return sum(function_loads(vc, unit, rf, demand, ref))


# --- crosshaul bandwidth -----------------------------------------------------

def symbol_duration_s(mu: int) -> float:
    """OFDM symbol duration for numerology ``mu`` (14 symbols per slot)."""
    return 1e-3 / (14 * 2 ** mu)


def fs72x_full_rate_mbps(rf: RfConfig, consts: ScenarioConstants) -> float:
    bits_per_prb = 12 * consts.n_mant + consts.n_ex
    gbps = 2e-9 * (1 + consts.overhead_c) * rf.layers * rf.prb * bits_per_prb / symbol_duration_s(rf.numerology_mu)
    return gbps * 1e3


def segment_bandwidth(split: FunctionalSplit, rf: RfConfig, demand: SliceDemand, consts: ScenarioConstants) -> float:
    """Crosshaul rate in Mbps carried by one slice over a ``split`` boundary."""
    if demand.rate_mbps < 0:
        raise ValueError("demand must be non-negative")
    split = FunctionalSplit(split)
    ref = consts.reference_table
    if split is FunctionalSplit.FS72X:
        # PRB share follows the slice's share of the RU peak.
        return fs72x_full_rate_mbps(rf, consts) * demand.load_fraction
    scale = (rf.bw_mhz / ref.bw_ref) * (rf.layers / ref.a_ref) * (rf.mod_order / ref.m_ref)
    pr = demand.rate_mbps
    if split is FunctionalSplit.FS6:
        pr = pr * (1 + consts.cr_fraction)
    return pr * scale


# --- latency -----------------------------------------------------------------

def transmission_delay_us(frame_bytes: float, link_rate_gbps: float) -> float:
    if link_rate_gbps <= 0:
        raise ValueError("link rate must be positive")
    return frame_bytes * 8 / (link_rate_gbps * 1e3)


def edge_static_us(edge: Edge, consts: ScenarioConstants) -> float:
    return edge.length_km * consts.prop_us_per_km + consts.sf_us


def static_latency_us(path: Iterable[Edge], consts: ScenarioConstants) -> float:
    return sum(edge_static_us(e, consts) for e in path)


@dataclass(frozen=True)
class Flow:
    """A routed crosshaul flow. ``path`` is the ordered edge-id sequence."""

    id: Any
    cls: FlowClass
    path: tuple[int, ...]

    @cached_property
    def edge_set(self) -> frozenset[int]:
        return frozenset(self.path)

    @cached_property
    def previous(self) -> dict[int, int | None]:
        return {e: (self.path[i - 1] if i else None) for i, e in enumerate(self.path)}


def _interferes(flow: Flow, other: Flow, edge_id: int) -> bool:
    # Same ingress port iff the other flow also crossed our previous edge; a
    # first hop has its own ingress port.
    prev = flow.previous[edge_id]
    return prev is None or prev not in other.edge_set


def self_queuing_us(flow: Flow, edge: Edge, all_flows: Iterable[Flow], consts: ScenarioConstants) -> float:
    if edge.id not in flow.edge_set:
        raise ValueError("flow is not routed over edge")
    n = sum(
        1
        for o in all_flows
        if o.id != flow.id and o.cls is flow.cls and edge.id in o.edge_set and _interferes(flow, o, edge.id)
    )
    return n * transmission_delay_us(consts.frame_bytes, edge.capacity_gbps)


def queuing_us(flow: Flow, edge: Edge, all_flows: Iterable[Flow], consts: ScenarioConstants) -> float:
    """Strict-priority queuing delay on ``edge``.

    A fronthaul frame waits for at most one midhaul frame already on the
    wire; a midhaul frame waits one frame time per co-resident flow.
    """
    if edge.id not in flow.edge_set:
        raise ValueError("flow is not routed over edge")
    d = transmission_delay_us(consts.frame_bytes, edge.capacity_gbps)
    sharing = [o for o in all_flows if o.id != flow.id and edge.id in o.edge_set]
    if flow.cls is FlowClass.HPF:
        return d if any(o.cls is FlowClass.MPF for o in sharing) else 0.0
    return d * len(sharing)


# --- energy -----------------------------------------------------------------

def pp_energy_wh(node: Node, used_gops: float, period_h: float, consts: ScenarioConstants) -> float:
    """Dynamic (load-proportional) energy of a processing pool."""
    if used_gops < 0 or used_gops > node.capacity_gops * (1 + 1e-12):
        raise ValueError(f"node {node.id}: {used_gops} GOPS outside [0, {node.capacity_gops}]")
    return pp_energy_per_gops(node, period_h, consts) * used_gops


def pp_energy_per_gops(node: Node, period_h: float, consts: ScenarioConstants) -> float:
    """Wh per GOPS of load; bit-identical for pools with the same per-CPU capacity."""
    if node.capacity_gops == 0:
        return 0.0
    return (consts.w_full - consts.w_idle) * period_h * (node.cpus / node.capacity_gops)


def pp_infra_wh(node: Node, period_h: float, consts: ScenarioConstants) -> float:
    per_cpu = consts.w_idle if consts.pp_infra_w_per_cpu is None else consts.pp_infra_w_per_cpu
    return node.cpus * per_cpu * period_h


def port_power_w(rate_gbps: float, consts: ScenarioConstants) -> float:
    return consts.w_port_by_rate.get(float(rate_gbps), consts.w_port)


def switch_energy_wh(
    active_linecards: int,
    active_ports_by_rate: Mapping[float, int],
    period_h: float,
    consts: ScenarioConstants,
    active: bool = True,
) -> float:
    if active_linecards < 0 or any(c < 0 for c in active_ports_by_rate.values()):
        raise ValueError("counts must be non-negative")
    if not active:
        return 0.0
    watts = consts.w_chassis + active_linecards * consts.w_linecard
    watts += sum(n * port_power_w(rate, consts) for rate, n in active_ports_by_rate.items())
    return watts * period_h
