"""Run a backend on a built model, decode the result and handle the lexicographic mode."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .. import vc_catalog as vcs
from ..feasibility import LEX_TOL, Assignment, EvalReport, Mode, Solution, check, evaluate
from ..vc_catalog import VC, Segment, Unit
from .backends import Backend, BackendResult, HighsBackend
from .model import ConstraintRow, LinExpr, MilpModel, Sense, VarKind


class MilpInfeasible(RuntimeError):
    pass


class BackendFailure(RuntimeError):
    pass


@dataclass
class MilpResult:
    solution: Solution
    objective: float
    status: str  # optimal | time_limit
    report: EvalReport
    stats: dict[str, Any] = field(default_factory=dict)
    energy_wh: float = 0.0
    sum_fh_us: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def decode(model: MilpModel, x: np.ndarray) -> Solution:
    """Map binary variable values back to assignments."""
    meta = model.metadata
    scen = meta["scenario"]
    chosen = {}
    for (pair, k), vid in meta["vc_var"].items():
        if x[vid] > 0.5:
            chosen[pair] = k
    units = {}
    for (pair, k, unit, v), vid in meta["unit_var"].items():
        if chosen.get(pair) == k and x[vid] > 0.5:
            units[(pair, unit)] = v
    paths = {}
    for (pair, k, seg, a, b, z), vid in meta["path_var"].items():
        if chosen.get(pair) == k and x[vid] > 0.5:
            paths[(pair, seg)] = meta["path_of"][vid][2]
    out = []
    for pair in scen.pairs:
        if pair not in chosen:
            raise BackendFailure(f"no VC selected for {pair}")
        k = chosen[pair]
        segs = vcs.segments(k)
        out.append(Assignment(
            pair[0], pair[1], VC(k),
            units[(pair, Unit.CU)], units[(pair, Unit.DU)], units[(pair, Unit.RU)],
            paths.get((pair, Segment.MH)) if Segment.MH in segs else None,
            paths.get((pair, Segment.FH)) if Segment.FH in segs else None,
        ))
    return Solution(tuple(out), meta["hour"])


def polish(model: MilpModel, x: np.ndarray, backend: Backend | None = None) -> np.ndarray:
    """Fix binaries at their rounded values and re-solve the remaining LP."""
    fixed = {v.id: float(round(x[v.id])) for v in model.variables if v.kind is VarKind.BINARY}
    lp = model.derive(fixed=fixed, relax=True)
    res = (backend if isinstance(backend, HighsBackend) else HighsBackend()).optimize(lp)
    if res.status != "optimal":
        return x
    return res.x


def _run(model: MilpModel, backend: Backend, time_limit) -> BackendResult:
    res = backend.optimize(model, time_limit=time_limit)
    if res.status == "infeasible":
        raise MilpInfeasible(f"model {model.name} is infeasible")
    if res.status == "error" or (res.x is None and res.solution is None):
        raise BackendFailure(f"{backend.name}: {res.stats.get('message')}")
    return res


def solve(model: MilpModel, backend: Backend | None = None, time_limit: float | None = None,
          polish_lp: bool = True) -> MilpResult:
    """Optimise ``model``. The lexicographic mode runs two stages:
    energy first, then FH latency with the energy kept within ``LEX_TOL``."""
    backend = backend or HighsBackend()
    scen = model.metadata["scenario"]
    energy: LinExpr = model.metadata["energy"]
    fh: LinExpr = model.metadata["fh_latency"]
    t0 = time.perf_counter()
    stats: dict[str, Any] = {"backend": backend.name, "n_vars": model.n_vars, "n_rows": model.n_rows,
                             "big_m": model.metadata["big_m"], "k_paths": model.metadata["k_paths"]}

    if model.mode is Mode.LEXICOGRAPHIC:
        if getattr(backend, "solves_mode", False):  # enumerating backends handle both stages at once
            res, x = _run(model, backend, time_limit), None
        else:
            first = _run(model.derive(objective=energy), backend, time_limit)
            stats["stage1"] = first.stats
            x1 = polish(model, first.x, backend) if polish_lp else first.x
            f1 = energy.value(x1)
            stats["f1_star"] = f1
            lex_model = model.derive(objective=fh, extra_rows=[lex_row(energy, f1)])
            res = _run(lex_model, backend, time_limit)
            x = polish(lex_model, res.x, backend) if polish_lp else res.x
    else:
        res = _run(model, backend, time_limit)
        x = res.x
        if x is not None and polish_lp:
            x = polish(model, x, backend)
    stats.update({f"last_{k}": v for k, v in res.stats.items()})

    if res.solution is not None:
        sol = res.solution
    else:
        sol = decode(model, x)
    rep = check(sol, scen)
    if not rep.ok:
        raise BackendFailure(f"decoded solution violates constraints: {rep.summary()}")
    ev = evaluate(sol, scen, skip_check=True)
    if x is not None:
        stats["model_energy"] = energy.value(x)
        stats["model_fh_latency"] = fh.value(x)
        stats["max_row_violation"] = model.max_violation(x)
    stats["wall_s"] = time.perf_counter() - t0
    objective = ev.sum_fh_latency_us if model.mode is Mode.FH_LATENCY else ev.energy_wh_total
    status = "optimal" if res.status == "optimal" else res.status
    return MilpResult(sol, objective, status, ev, stats, ev.energy_wh_total, ev.sum_fh_latency_us)


def lex_row(energy: LinExpr, f1: float) -> ConstraintRow:
    """Energy may not exceed the stage-one optimum by more than ``LEX_TOL`` (relative)."""
    return ConstraintRow("lex.0", energy.copy(), Sense.LE, f1 * (1 + LEX_TOL) - energy.constant, "plumbing")


def solve_scenario(scen, mode: Mode | str = Mode.ENERGY, hour: int = 0, backend: Backend | None = None,
                   time_limit: float | None = None, k_paths: int | None = None) -> MilpResult:
    from .builder import build

    return solve(build(scen, mode, hour=hour, k_paths=k_paths), backend, time_limit)
