"""Command line entry point: ``xhaulopt {solve,compare,export-milp,gen-scenario,validate}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .. import __version__
from ..scenario_io import DEFAULT_K_PATHS, ScenarioError, distinct_hours, generate_scenario, load_scenario
from .records import SOLVERS, SolverFailed, run_solver
from .tables import write_report

EXIT_OK, EXIT_INFEASIBLE, EXIT_SCHEMA = 0, 2, 3


def parse_hours(spec: str) -> list[int]:
    """'all', '5', '0..23', '0-3,8,10..11' -> sorted unique hours."""
    if spec.strip().lower() == "all":
        return list(range(24))
    hours: set[int] = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        for sep in ("..", "-"):
            if sep in part:
                lo, hi = (int(x) for x in part.split(sep, 1))
                hours.update(range(lo, hi + 1))
                break
        else:
            hours.add(int(part))
    bad = [h for h in hours if not 0 <= h <= 23]
    if bad or not hours:
        raise argparse.ArgumentTypeError(f"hours must lie in 0..23, got {spec!r}")
    return sorted(hours)


def parse_solvers(spec: str) -> list[str]:
    out = [s.strip() for s in spec.split(",") if s.strip()]
    for s in out:
        if s not in SOLVERS:
            raise argparse.ArgumentTypeError(f"unknown solver {s!r}; choose from {', '.join(SOLVERS)}")
    return out


def _load(path: str):
    """A JSON file, or ``fixture:NAME`` for a bundled fixture."""
    if path.startswith("fixture:"):
        from ..fixtures import hierarchical_scenario, infeasible_fixture, tiny_fixtures

        name = path.split(":", 1)[1]
        docs = dict(tiny_fixtures(), **{"urllc-far": infeasible_fixture(), "hierarchical": hierarchical_scenario()})
        if name not in docs:
            raise ScenarioError(f"unknown fixture {name!r}; known: {', '.join(sorted(docs))}")
        return load_scenario(docs[name])
    return load_scenario(path)


def _workers(n_tasks: int, flag: int | None) -> int:
    cap = flag or int(os.environ.get("XHAULOPT_THREADS", "0") or 0) or (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def _run_all(scen, hours, solvers, args):
    """Solve every (hour, solver); returns (records, failures)."""
    reps = distinct_hours(scen, hours) if args.dedup_hours else {h: h for h in hours}
    tasks = sorted({(reps[h], s) for h in hours for s in solvers})
    results, failures = {}, []

    def one(task):
        hour, solver = task
        try:
            return task, run_solver(scen, hour, solver, backend=args.backend, time_limit=args.time_limit), None
        except SolverFailed as exc:
            return task, None, exc

    with ThreadPoolExecutor(max_workers=_workers(len(tasks), args.threads)) as pool:
        for task, rec, err in pool.map(one, tasks):
            if err is not None:
                failures.append(err)
            else:
                results[task] = rec
    records = []
    for h in hours:
        for s in solvers:
            rec = results.get((reps[h], s))
            if rec is not None:
                records.append(rec if reps[h] == h else replace(rec, hour=h, stats=dict(rec.stats, copied_from=reps[h])))
    return records, sorted(failures, key=lambda e: (e.hour, e.solver))


def _report_failures(failures) -> None:
    print("no feasible configuration for:", file=sys.stderr)
    for f in failures:
        print(f"  hour {f.hour:2d}  {f.solver:13s} {f.detail}", file=sys.stderr)


def cmd_solve(args, compare=False) -> int:
    scen = _load(args.scenario)
    solvers = args.solvers if compare else args.solver
    records, failures = _run_all(scen, args.hours, solvers, args)
    extra = {"dedup_hours": bool(args.dedup_hours), "backend": args.backend, "version": __version__}
    if failures:
        extra["failures"] = [{"hour": f.hour, "solver": f.solver, "detail": f.detail} for f in failures]
    write_report(Path(args.out), scen, records, solvers, args.hours, args.command, extra, compare=compare)
    print(f"{len(records)} records, {len(failures)} failures -> {args.out}")
    if failures:
        _report_failures(failures)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_export(args) -> int:
    from ..feasibility import Mode
    from ..milp import build, export

    scen = _load(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "lp" if args.format == "lp" else "mps"
    for h in args.hours:
        model = build(scen, Mode(args.mode), hour=h)
        (out / f"{scen.name}_h{h:02d}.{ext}").write_text(export(model, args.format))
        print(f"hour {h:2d}: {model.n_vars} variables, {model.n_rows} rows")
    return EXIT_OK


def cmd_gen(args) -> int:
    doc = generate_scenario(seed=args.seed, name=args.name, k_paths=args.k_paths)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    scen = _load(args.scenario)
    topo = scen.topology
    print(f"{scen.name}: schema ok, digest {scen.digest}")
    print(f"  {len(topo.nodes)} nodes, {len(topo.edges)} edges, {len(scen.gnbs)} gNBs, "
          f"slices {', '.join(s.value for s in scen.slices)}, k_paths {scen.k_paths}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xhaulopt", description="Energy/latency-aware RAN configuration planner.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solver_flag):
        sp.add_argument("--scenario", required=True, help="scenario JSON, or fixture:NAME")
        sp.add_argument("--hours", type=parse_hours, default=parse_hours("all"), help="e.g. all, 0..23, 0,6,12")
        sp.add_argument(solver_flag, type=parse_solvers, default=["heuristic"],
                        help=f"comma list of {', '.join(SOLVERS)}")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--backend", default="highs", choices=["highs", "glpk", "oracle"])
        sp.add_argument("--time-limit", type=float, default=None, help="per MILP solve, seconds")
        sp.add_argument("--threads", type=int, default=None, help="worker cap (default: XHAULOPT_THREADS or CPUs)")
        sp.add_argument("--dedup-hours", action="store_true", help="solve each distinct pattern value once")

    common(sub.add_parser("solve", help="solve hours and write report tables"), "--solver")
    cp = sub.add_parser("compare", help="run several solvers and report energy gaps")
    common(cp, "--solvers")

    ep = sub.add_parser("export-milp", help="write the MILP of each hour as LP or MPS text")
    ep.add_argument("--scenario", required=True)
    ep.add_argument("--hours", type=parse_hours, default=[0])
    ep.add_argument("--format", choices=["lp", "mps"], default="lp")
    ep.add_argument("--mode", choices=["EnergyMin", "FhLatencyMin", "Lexicographic"], default="EnergyMin")
    ep.add_argument("--out", required=True)

    gp = sub.add_parser("gen-scenario", help="synthetic scenario on the hierarchical topology")
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--name", default="hierarchical")
    gp.add_argument("--k-paths", type=int, default=DEFAULT_K_PATHS)
    gp.add_argument("--out", default="-", help="file path or - for stdout")

    vp = sub.add_parser("validate", help="check a scenario document")
    vp.add_argument("--scenario", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "compare":
            return cmd_solve(args, compare=True)
        if args.command == "export-milp":
            return cmd_export(args)
        if args.command == "gen-scenario":
            return cmd_gen(args)
        return cmd_validate(args)
    except (ScenarioError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
