"""RAN transport graph: processing pools, switches, the core, and fiber links."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import networkx as nx

DEFAULT_PER_CPU_GOPS = 864.0


class TopologyError(ValueError):
    """Raised when a topology document is malformed or violates an invariant."""


class NodeKind(str, enum.Enum):
    REGIONAL_PP = "RegionalPP"
    EDGE_PP = "EdgePP"
    CELL_SITE_PP = "CellSitePP"
    SWITCH = "Switch"
    CORE = "Core"

    @property
    def is_pp(self) -> bool:
        return self in (NodeKind.REGIONAL_PP, NodeKind.EDGE_PP, NodeKind.CELL_SITE_PP)


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    cpus: int = 0
    capacity_gops: float = 0.0
    core_adjacent: bool = False
    linecards: int = 1
    name: str = ""


@dataclass(frozen=True)
class Edge:
    id: int
    a: int
    b: int
    capacity_gbps: float
    length_km: float

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.a, self.b)

    def other(self, node: int) -> int:
        if node == self.a:
            return self.b
        if node == self.b:
            return self.a
        raise KeyError(f"node {node} is not an endpoint of edge {self.id}")


Path = tuple[int, ...]  # edge ids, ordered from source to destination


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    _adj: Mapping[int, tuple[tuple[int, int], ...]] = field(repr=False, compare=False, default=None)
    _pair: Mapping[frozenset, int] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        adj: dict[int, list[tuple[int, int]]] = {n.id: [] for n in self.nodes}
        pair: dict[frozenset, int] = {}
        for e in self.edges:
            adj[e.a].append((e.b, e.id))
            adj[e.b].append((e.a, e.id))
            pair[frozenset(e.endpoints)] = e.id
        object.__setattr__(self, "_adj", {k: tuple(sorted(v)) for k, v in adj.items()})
        object.__setattr__(self, "_pair", pair)

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def edge(self, edge_id: int) -> Edge:
        return self.edges[edge_id]

    def neighbors(self, node_id: int) -> tuple[tuple[int, int], ...]:
        """(neighbor, edge id) pairs sorted by neighbor id."""
        return self._adj[node_id]

    def edge_between(self, a: int, b: int) -> int | None:
        return self._pair.get(frozenset((a, b)))

    @property
    def core(self) -> Node:
        return next(n for n in self.nodes if n.kind is NodeKind.CORE)

    def nodes_of(self, *kinds: NodeKind) -> list[Node]:
        return [n for n in self.nodes if n.kind in kinds]

    @property
    def pp_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.kind.is_pp]

    @property
    def switches(self) -> list[Node]:
        return self.nodes_of(NodeKind.SWITCH)

    def path_nodes(self, path: Path, src: int) -> tuple[int, ...]:
        """Node sequence visited by ``path`` when starting at ``src``."""
        seq = [src]
        for eid in path:
            seq.append(self.edges[eid].other(seq[-1]))
        return tuple(seq)

    def path_length_km(self, path: Path) -> float:
        return sum(self.edges[e].length_km for e in path)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for n in self.nodes:
            g.add_node(n.id)
        for e in self.edges:
            g.add_edge(e.a, e.b, id=e.id, length=e.length_km)
        return g


def load_topology(doc: Mapping[str, Any], per_cpu_gops: float | None = None) -> Topology:
    """Build a validated :class:`Topology` from a scenario-style mapping.

    ``doc`` may be a whole scenario document (the ``topology`` section is used)
    or just the ``{"nodes": ..., "edges": ...}`` part.
    """
    if "topology" in doc:
        constants = doc.get("constants", {}) or {}
        doc = doc["topology"]
    else:
        constants = doc.get("constants", {}) or {}
    if per_cpu_gops is None:
        per_cpu_gops = float(constants.get("per_cpu_gops", DEFAULT_PER_CPU_GOPS))

    try:
        raw_nodes = list(doc["nodes"])
        raw_edges = list(doc["edges"])
    except (KeyError, TypeError) as exc:
        raise TopologyError(f"topology needs 'nodes' and 'edges' lists: {exc}") from None

    ids = sorted(_req(n, "id", int) for n in raw_nodes)
    if ids != list(range(len(raw_nodes))):
        raise TopologyError("node ids must be unique and dense from 0")

    by_id = {}
    for raw in raw_nodes:
        nid = _req(raw, "id", int)
        try:
            kind = NodeKind(raw["kind"])
        except (KeyError, ValueError):
            raise TopologyError(f"node {nid}: unknown kind {raw.get('kind')!r}") from None
        cpus = int(raw.get("cpus", 0))
        if cpus < 0:
            raise TopologyError(f"node {nid}: negative cpu count")
        if not kind.is_pp:
            if cpus or raw.get("capacity_gops", 0):
                raise TopologyError(f"node {nid}: {kind.value} nodes cannot carry computing capacity")
            capacity = 0.0
        else:
            capacity = cpus * per_cpu_gops
            if "capacity_gops" in raw and not math.isclose(float(raw["capacity_gops"]), capacity):
                raise TopologyError(f"node {nid}: capacity_gops must equal cpus x per_cpu_gops")
        linecards = int(raw.get("linecards", 1 if kind is NodeKind.SWITCH else 0))
        if linecards < 0:
            raise TopologyError(f"node {nid}: negative linecard count")
        by_id[nid] = dict(id=nid, kind=kind, cpus=cpus, capacity_gops=capacity,
                          linecards=linecards, name=str(raw.get("name", "")),
                          core_adjacent=raw.get("core_adjacent"))

    cores = [n for n in by_id.values() if n["kind"] is NodeKind.CORE]
    if len(cores) != 1:
        raise TopologyError(f"exactly one Core node required, found {len(cores)}")
    core_id = cores[0]["id"]

    edges = []
    seen = set()
    for eid, raw in enumerate(raw_edges):
        a, b = _req(raw, "a", int), _req(raw, "b", int)
        if a not in by_id or b not in by_id:
            raise TopologyError(f"edge {eid}: unknown endpoint")
        if a == b:
            raise TopologyError(f"edge {eid}: self loop")
        key = frozenset((a, b))
        if key in seen:
            raise TopologyError(f"edge {eid}: duplicate edge between {a} and {b}")
        seen.add(key)
        cap = float(_req(raw, "capacity_gbps", float))
        length = float(_req(raw, "length_km", float))
        if not cap > 0:
            raise TopologyError(f"edge {eid}: capacity must be positive")
        if length < 0:
            raise TopologyError(f"edge {eid}: negative length")
        edges.append(Edge(eid, a, b, cap, length))

    core_nbrs = {e.other(core_id) for e in edges if core_id in e.endpoints}
    nodes = []
    for nid in range(len(by_id)):
        d = by_id[nid]
        adj = d.pop("core_adjacent")
        if adj is None:
            adj = nid in core_nbrs
        nodes.append(Node(core_adjacent=bool(adj) and d["kind"].is_pp, **d))

    topo = Topology(tuple(nodes), tuple(edges))
    g = topo.to_networkx()
    if not nx.is_connected(g):
        raise TopologyError("topology graph is not connected")
    return topo


def _req(raw: Mapping, key: str, typ):
    try:
        return typ(raw[key])
    except (KeyError, TypeError, ValueError):
        raise TopologyError(f"missing or invalid field {key!r} in {dict(raw)!r}") from None


def _path_key(topo: Topology, path: Path) -> tuple:
    return (round(topo.path_length_km(path), 9), len(path), path)


def k_shortest_paths(
    t: Topology,
    src: int,
    dst: int,
    k: int | float = 4,
    avoid: Iterable[int] = (),
) -> list[Path]:
    """Up to ``k`` loop-free paths from ``src`` to ``dst``.

    Paths are ordered by total length, then hop count, then the edge-id
    sequence. Nodes in ``avoid`` may not be used as intermediate hops.
    ``k=math.inf`` returns every simple path.
    """
    if src == dst:
        raise ValueError("src and dst must differ")
    n = len(t.nodes)
    if not (0 <= src < n and 0 <= dst < n):
        raise KeyError("unknown node")
    banned = set(avoid) - {src, dst}
    g = t.to_networkx()
    g.remove_nodes_from(banned)
    if not nx.has_path(g, src, dst):
        raise nx.NetworkXNoPath(f"no path between {src} and {dst}")

    found: list[Path] = []
    cutoff = None
    for nodes in nx.shortest_simple_paths(g, src, dst, weight="length"):
        path = tuple(g.edges[u, v]["id"] for u, v in zip(nodes, nodes[1:]))
        length = round(t.path_length_km(path), 9)
        # Collect every path tied with the k-th by length, then sort on the full key.
        if cutoff is not None and length > cutoff:
            break
        found.append(path)
        if cutoff is None and len(found) >= k:
            cutoff = length
    found.sort(key=lambda p: _path_key(t, p))
    if math.isinf(k):
        return found
    return found[: int(k)]


def shortest_distance_km(t: Topology, src: int, dst: int, avoid: Iterable[int] = ()) -> float:
    if src == dst:
        return 0.0
    g = t.to_networkx()
    g.remove_nodes_from(set(avoid) - {src, dst})
    try:
        return float(nx.shortest_path_length(g, src, dst, weight="length"))
    except nx.NetworkXNoPath:
        return math.inf
