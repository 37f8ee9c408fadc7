"""Run one solver on one hour and capture the outcome as a :class:`RunRecord`."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Any

from ..feasibility import EvalReport, Mode, Solution
from ..scenario_io import Scenario

SOLVERS = ("milp-energy", "milp-latency", "milp-lex", "heuristic", "oracle")
MILP_MODES = {"milp-energy": Mode.ENERGY, "milp-latency": Mode.FH_LATENCY, "milp-lex": Mode.LEXICOGRAPHIC}


class SolverFailed(RuntimeError):
    """A solver found no feasible configuration (infeasible, unplaceable or no solution)."""

    def __init__(self, hour: int, solver: str, detail: str):
        self.hour, self.solver, self.detail = hour, solver, detail
        super().__init__(f"hour {hour}, {solver}: {detail}")


@dataclass
class RunRecord:
    scenario: str
    scenario_hash: str
    hour: int
    solver: str
    status: str
    solution: Solution
    report: EvalReport
    stats: dict[str, Any] = field(default_factory=dict)
    wall_s: float = 0.0

    @property
    def energy_wh(self) -> float:
        return self.report.energy_wh_total

    def summary(self) -> dict:
        """JSON-safe, run-to-run stable view (no timings)."""
        rep = self.report
        return {
            "hour": self.hour,
            "solver": self.solver,
            "status": self.status,
            "energy_wh_total": rep.energy_wh_total,
            "energy_by_node": {str(k): v for k, v in sorted(rep.energy_by_node.items())},
            "sum_fh_latency_us": rep.sum_fh_latency_us,
            "assignments": [list(_jsonable(a.encode())) for a in self.solution.assignments],
            "stats": {k: v for k, v in sorted(self.stats.items()) if k in STABLE_STATS},
        }


# statistics that do not depend on timing or thread scheduling
STABLE_STATS = {"n_vars", "n_rows", "big_m", "k_paths", "iterations", "feasible_count", "accepted_moves",
                "rejected_moves", "configure_calls", "routing_failures", "restarts", "construction_energy_wh",
                "backend", "mode"}


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    return x


def scenario_sha256(scen: Scenario) -> str:
    blob = json.dumps(scen.document, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def run_solver(scen: Scenario, hour: int, solver: str, backend: str = "highs",
               time_limit: float | None = None) -> RunRecord:
    """Solve ``hour`` with ``solver``; raises :class:`SolverFailed` when nothing feasible is found."""
    from ..heuristic import HeuristicParams, Unplaceable, run
    from ..milp import MilpInfeasible, get_backend, solve
    from ..milp.builder import build
    from ..oracle import NoFeasible, enumerate_optimum

    t0 = time.perf_counter()
    if solver == "heuristic":
        try:
            res = run(scen, HeuristicParams.from_mapping(scen.heuristic), hour=hour)
        except Unplaceable as exc:
            raise SolverFailed(hour, solver, str(exc)) from exc
        sol, rep, status = res.solution, res.report, "feasible"
        stats = dict(res.stats, construction_energy_wh=res.construction_energy_wh)
    elif solver in MILP_MODES:
        mode = MILP_MODES[solver]
        try:
            res = solve(build(scen, mode, hour=hour), get_backend(backend), time_limit=time_limit)
        except MilpInfeasible as exc:
            raise SolverFailed(hour, solver, str(exc)) from exc
        sol, rep, status = res.solution, res.report, res.status
        stats = dict(res.stats, mode=mode.value)
    elif solver == "oracle":
        try:
            res = enumerate_optimum(scen, Mode.ENERGY, hour=hour)
        except NoFeasible as exc:
            raise SolverFailed(hour, solver, str(exc)) from exc
        sol, rep, status = res.solution, res.report, "optimal"
        stats = {"feasible_count": res.feasible_count, "visited": res.visited}
    else:
        raise ValueError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    return RunRecord(scen.name, scen.digest, hour, solver, status, sol, rep, stats, time.perf_counter() - t0)
