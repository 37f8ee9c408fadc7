"""Small scenario documents used by the tests, tutorials and the CLI.

Every fixture is small enough for exhaustive enumeration: at most
8 nodes, 3 gNBs x 3 slices and 3 candidate paths per node pair.
"""

from __future__ import annotations

import copy

from .scenario_io import RF_PROFILES, SCHEMA_VERSION, generate_scenario

FIXTURE_HOUR = 0


def _node(i, kind, cpus=0):
    out = {"id": i, "kind": kind}
    if cpus:
        out["cpus"] = cpus
    return out


def _edges(rows):
    return [{"a": a, "b": b, "capacity_gbps": c, "length_km": l} for a, b, c, l in rows]


def scenario_doc(name, nodes, edges, gnbs, shares=None, level=1.0, k_paths=1, **extra) -> dict:
    """Assemble a scenario whose hour 0 runs at ``level`` of the peak."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "topology": {"nodes": nodes, "edges": _edges(edges)},
        "constants": {},
        "rf_profiles": copy.deepcopy(RF_PROFILES),
        "gnbs": [{"id": i, "cell_node": c, "rf_profile": p, "peak_mbps": pk} for i, (c, p, pk) in enumerate(gnbs)],
        "slice_shares": shares or {"eMBB": 0.70, "URLLC": 0.25, "mMTC": 0.05},
        "hourly_pattern": [level] + [1.0] * 23,
        "k_paths": k_paths,
    }
    doc.update(extra)
    return doc


# Core - regional pool - switch - edge pool - cell site
def _line(cell_cpus=1, lengths=(0.5, 5.0, 2.0, 1.5)):
    nodes = [_node(0, "Core"), _node(1, "RegionalPP", 2), _node(2, "Switch"),
             _node(3, "EdgePP", 1), _node(4, "CellSitePP", cell_cpus)]
    l01, l12, l23, l34 = lengths
    edges = [(0, 1, 200, l01), (1, 2, 200, l12), (2, 3, 200, l23), (3, 4, 25, l34)]
    return nodes, edges


def _tree(cross=False):
    nodes = [_node(0, "Core"), _node(1, "RegionalPP", 3), _node(2, "Switch"), _node(3, "EdgePP", 1),
             _node(4, "EdgePP", 1), _node(5, "CellSitePP", 1), _node(6, "CellSitePP", 1)]
    edges = [(0, 1, 200, 0.5), (1, 2, 200, 4.0), (2, 3, 100, 2.0), (2, 4, 100, 3.0),
             (3, 5, 25, 1.5), (4, 6, 25, 2.0)]
    if cross:
        edges.append((3, 4, 200, 1.0))
    return nodes, edges


def _ring():
    nodes = [_node(0, "Core"), _node(1, "RegionalPP", 3), _node(2, "Switch"), _node(3, "Switch"),
             _node(4, "Switch"), _node(5, "EdgePP", 2), _node(6, "CellSitePP", 1)]
    edges = [(0, 1, 200, 0.5), (1, 2, 200, 3.0), (2, 3, 100, 4.0), (3, 4, 100, 4.0),
             (2, 4, 100, 6.0), (3, 5, 200, 1.0), (4, 5, 200, 1.5), (5, 6, 25, 1.0)]
    return nodes, edges


def _dual_core():
    nodes = [_node(0, "Core"), _node(1, "RegionalPP", 2), _node(2, "RegionalPP", 2), _node(3, "Switch"),
             _node(4, "EdgePP", 1), _node(5, "CellSitePP", 1)]
    edges = [(0, 1, 200, 0.5), (0, 2, 200, 2.0), (1, 3, 200, 4.0), (2, 3, 200, 1.0),
             (3, 4, 200, 2.0), (4, 5, 25, 1.5), (1, 4, 100, 9.0)]
    return nodes, edges


def _three_cells():
    nodes = [_node(0, "Core"), _node(1, "RegionalPP", 3), _node(2, "Switch"), _node(3, "EdgePP", 1),
             _node(4, "EdgePP", 1), _node(5, "CellSitePP", 1), _node(6, "CellSitePP", 1),
             _node(7, "CellSitePP", 1)]
    edges = [(0, 1, 200, 0.5), (1, 2, 200, 4.0), (2, 3, 100, 2.0), (2, 4, 100, 3.0),
             (3, 5, 25, 1.5), (3, 6, 25, 2.5), (4, 7, 25, 1.0)]
    return nodes, edges


def tiny_fixtures() -> dict[str, dict]:
    """Named fixture documents for solver cross-validation."""
    fx = {}
    fx["hand-3node"] = scenario_doc(
        "hand-3node",
        [_node(0, "Core"), _node(1, "RegionalPP", 2), _node(2, "CellSitePP", 1)],
        [(0, 1, 200, 0.5), (1, 2, 25, 2.0)],
        [(2, "nr20", 200.0)],
        shares={"URLLC": 1.0},
    )
    fx["line-nr40"] = scenario_doc("line-nr40", *_line(), [(4, "nr40", 400.0)])
    fx["line-nr100"] = scenario_doc("line-nr100", *_line(), [(4, "nr100", 1000.0)])
    fx["line-nr100-half"] = scenario_doc("line-nr100-half", *_line(), [(4, "nr100", 1000.0)], level=0.5)
    fx["tree-2gnb"] = scenario_doc("tree-2gnb", *_tree(), [(5, "nr100", 1000.0), (6, "nr40", 400.0)],
                                   shares={"eMBB": 0.75, "URLLC": 0.25})
    fx["tree-cross-k2"] = scenario_doc("tree-cross-k2", *_tree(cross=True), [(5, "nr40", 450.0), (6, "nr20", 180.0)],
                                       shares={"URLLC": 1.0}, k_paths=2)
    fx["ring-k2"] = scenario_doc("ring-k2", *_ring(), [(6, "nr100", 900.0)], k_paths=2)
    fx["ring-k3"] = scenario_doc("ring-k3", *_ring(), [(6, "nr40", 500.0)], k_paths=3)
    fx["dual-core-k2"] = scenario_doc("dual-core-k2", *_dual_core(), [(5, "nr100", 1100.0)], k_paths=2)
    fx["fh-tight"] = scenario_doc("fh-tight", *_line(lengths=(0.5, 40.0, 10.0, 1.0)), [(4, "nr40", 400.0)],
                                  shares={"eMBB": 0.9, "mMTC": 0.1})
    fx["zero-demand"] = scenario_doc("zero-demand", *_line(), [(4, "nr100", 1000.0)], level=0.0)
    fx["three-cells-urllc"] = scenario_doc("three-cells-urllc", *_three_cells(),
                                           [(5, "nr100", 1000.0), (6, "nr40", 400.0), (7, "nr20", 200.0)],
                                           shares={"URLLC": 1.0})
    return fx


def infeasible_fixture() -> dict:
    """URLLC on a line whose shortest route already exceeds 250 us of static delay."""
    nodes, edges = _line(lengths=(0.5, 40.0, 10.0, 1.0))
    return scenario_doc("urllc-far", nodes, edges, [(4, "nr40", 400.0)], shares={"URLLC": 1.0})


def hierarchical_scenario(seed: int = 7) -> dict:
    """The 16-node hierarchical topology with six gNBs and the full 24 h pattern."""
    return generate_scenario(seed=seed)
