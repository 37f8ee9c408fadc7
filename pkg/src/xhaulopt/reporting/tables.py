"""Tabular views of run records, written as CSV plus a JSON manifest.

Every table except ``solver_stats.csv`` is a pure function of the records'
solutions, so reruns on the same inputs produce identical files.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from ..phys_models import Slice
from ..vc_catalog import VC, Segment
from .records import RunRecord, scenario_sha256

TABLES = {
    "energy_by_hour": ["hour", "solver", "status", "energy_wh", "pp_dynamic_wh", "pp_infra_wh", "switch_wh",
                       "sum_fh_latency_us", "active_pp", "active_sw"],
    "latency_cdf_points": ["solver", "slice", "segment", "latency_us", "cdf", "hour", "gnb"],
    "vc_selection_by_hour": ["hour", "solver", "slice"] + [v.name for v in VC],
    "pp_utilization_by_hour": ["hour", "solver", "node", "kind", "gops_used", "capacity_gops", "utilization",
                               "energy_wh"],
    "edge_load_by_hour": ["hour", "solver", "edge", "a", "b", "capacity_mbps", "fh_mbps", "mh_mbps", "load_mbps",
                          "utilization"],
}
STATS_COLUMNS = ["hour", "solver", "status", "wall_s", "n_vars", "n_rows", "nodes", "gap"]
COMPARE_COLUMNS = ["hour", "solver", "energy_wh", "reference", "reference_energy_wh", "gap"]


def fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return f"{x:.6f}"
    return str(x)


def _order(records: Iterable[RunRecord], solvers: Sequence[str] | None = None) -> list[RunRecord]:
    rank = {s: i for i, s in enumerate(solvers or ())}
    return sorted(records, key=lambda r: (r.hour, rank.get(r.solver, len(rank)), r.solver))


def energy_rows(records, scen):
    for r in records:
        rep = r.report
        yield [r.hour, r.solver, r.status, rep.energy_wh_total, rep.pp_dynamic_wh, rep.pp_infra_wh, rep.switch_wh,
               rep.sum_fh_latency_us, len(rep.active_pp), len(rep.active_sw)]


def latency_rows(records, scen):
    samples: dict[tuple[str, Slice, str], list[tuple[float, int, int]]] = {}
    for r in records:
        for (g, sl) in sorted(r.report.fh, key=lambda p: (p[0], list(Slice).index(p[1]))):
            fh, mh = r.report.fh_latency_us((g, sl)), r.report.mh_latency_us((g, sl))
            for seg, val in ((Segment.FH.value, fh), (Segment.MH.value, mh), ("E2E", fh + mh)):
                samples.setdefault((r.solver, sl, seg), []).append((val, r.hour, g))
    for (solver, sl, seg) in sorted(samples, key=lambda k: (k[0], list(Slice).index(k[1]), k[2])):
        pts = sorted(samples[(solver, sl, seg)])
        n = len(pts)
        for i, (val, hour, g) in enumerate(pts, start=1):
            yield [solver, sl.value, seg, val, i / n, hour, g]


def vc_rows(records, scen):
    for r in records:
        counts = Counter((a.slice, a.vc) for a in r.solution.assignments)
        for sl in scen.slices:
            yield [r.hour, r.solver, sl.value] + [counts.get((sl, v), 0) for v in VC]


def pp_rows(records, scen):
    topo = scen.topology
    for r in records:
        rep = r.report
        for n in topo.pp_nodes:
            used = rep.gops_used.get(n.id, 0.0)
            yield [r.hour, r.solver, n.id, n.kind.value, used, n.capacity_gops, rep.pp_utilization.get(n.id, 0.0),
                   rep.energy_by_node.get(n.id, 0.0)]


def edge_rows(records, scen):
    topo = scen.topology
    for r in records:
        rep = r.report
        for e in topo.edges:
            fh, mh = rep.edge_fh_mbps.get(e.id, 0.0), rep.edge_mh_mbps.get(e.id, 0.0)
            cap = e.capacity_gbps * 1000.0
            yield [r.hour, r.solver, e.id, e.a, e.b, cap, fh, mh, fh + mh, (fh + mh) / cap if cap else 0.0]


_BUILDERS = {"energy_by_hour": energy_rows, "latency_cdf_points": latency_rows, "vc_selection_by_hour": vc_rows,
             "pp_utilization_by_hour": pp_rows, "edge_load_by_hour": edge_rows}


def table_rows(name: str, records, scen) -> list[list]:
    return list(_BUILDERS[name](records, scen))


def compare_rows(records: Sequence[RunRecord], solvers: Sequence[str]) -> list[list]:
    """Energy gap of each solver to the best reference available in the same hour.

    The reference is the oracle if it ran, else the energy-optimal MILP,
    else the lowest energy among the solvers compared.
    """
    out = []
    by_hour: dict[int, dict[str, RunRecord]] = {}
    for r in records:
        by_hour.setdefault(r.hour, {})[r.solver] = r
    for hour in sorted(by_hour):
        recs = by_hour[hour]
        ref = next((s for s in ("oracle", "milp-energy", "milp-lex") if s in recs), None)
        if ref is None:
            ref = min(recs, key=lambda s: (recs[s].energy_wh, s))
        base = recs[ref].energy_wh
        for s in solvers:
            if s in recs:
                e = recs[s].energy_wh
                out.append([hour, s, e, ref, base, e / base - 1.0 if base else 0.0])
    return out


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_report(out: Path, scen, records: Sequence[RunRecord], solvers: Sequence[str], hours: Sequence[int],
                 command: str, extra: dict | None = None, compare: bool = False) -> dict:
    """Write the five tables, solver statistics and ``manifest.json`` into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    records = _order(records, solvers)
    files = {}
    for name, header in TABLES.items():
        _write_csv(out / f"{name}.csv", header, table_rows(name, records, scen))
        files[name] = f"{name}.csv"
    stats_rows = [[r.hour, r.solver, r.status, r.wall_s, r.stats.get("n_vars", ""), r.stats.get("n_rows", ""),
                   r.stats.get("last_nodes", ""), r.stats.get("last_gap", "")] for r in records]
    _write_csv(out / "solver_stats.csv", STATS_COLUMNS, stats_rows)
    if compare:
        _write_csv(out / "comparison.csv", COMPARE_COLUMNS, compare_rows(records, solvers))
        files["comparison"] = "comparison.csv"
    manifest = {
        "tool": "xhaulopt",
        "command": command,
        "scenario": scen.name,
        "scenario_sha256": scenario_sha256(scen),
        "hours": list(hours),
        "solvers": list(solvers),
        "tables": files,
        "columns": {k: v for k, v in TABLES.items()},
        "timings": "solver_stats.csv",
        "records": [r.summary() for r in records],
    }
    manifest.update(extra or {})
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return manifest
