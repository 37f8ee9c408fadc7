"""Solver backends. Each takes a :class:`MilpModel` and returns variable values."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from .model import MilpModel, Sense, VarKind


class BackendUnavailable(RuntimeError):
    pass


@dataclass
class BackendResult:
    status: str  # optimal | infeasible | time_limit | error
    x: np.ndarray | None = None
    objective: float | None = None
    stats: dict[str, Any] = field(default_factory=dict)
    solution: Any = None  # set by backends that return a decoded solution directly


class Backend(Protocol):
    name: str

    def optimize(self, model: MilpModel, time_limit: float | None = None) -> BackendResult: ...


class HighsBackend:
    """HiGHS branch-and-cut through :func:`scipy.optimize.milp`."""

    name = "highs"

    def __init__(self, mip_rel_gap: float = 1e-9, threads: int | None = None):
        self.mip_rel_gap = mip_rel_gap

    def optimize(self, model: MilpModel, time_limit: float | None = None) -> BackendResult:
        from scipy.optimize import Bounds, LinearConstraint, milp

        c, A, lo, hi, vlb, vub, integ = model.to_arrays()
        opts = {"disp": False, "mip_rel_gap": self.mip_rel_gap}
        if time_limit is not None:
            opts["time_limit"] = float(time_limit)
        t0 = time.perf_counter()
        cons = [LinearConstraint(A, lo, hi)] if model.n_rows else []
        res = milp(c, constraints=cons, integrality=integ, bounds=Bounds(vlb, vub), options=opts)
        wall = time.perf_counter() - t0
        stats = {"backend": self.name, "wall_s": wall, "message": res.message,
                 "nodes": getattr(res, "mip_node_count", None), "gap": getattr(res, "mip_gap", None)}
        if res.status == 0:
            return BackendResult("optimal", np.asarray(res.x), float(res.fun), stats)
        if res.status == 2:
            return BackendResult("infeasible", None, None, stats)
        if res.status == 1 and res.x is not None:
            return BackendResult("time_limit", np.asarray(res.x), float(res.fun), stats)
        if res.status == 1:
            return BackendResult("time_limit", None, None, stats)
        return BackendResult("error", None, None, stats)


class GlpkBackend:
    """GLPK branch-and-bound through cvxopt (optional dependency)."""

    name = "glpk"

    def optimize(self, model: MilpModel, time_limit: float | None = None) -> BackendResult:
        try:
            from cvxopt import matrix, spmatrix
            from cvxopt import glpk
        except ImportError as exc:  # pragma: no cover - depends on the environment
            raise BackendUnavailable("cvxopt with GLPK is not installed") from exc

        n = model.n_vars
        g_rows, g_cols, g_vals, h = [], [], [], []
        a_rows, a_cols, a_vals, b = [], [], [], []

        def push(rows, cols, vals, terms, sign, idx):
            for k, v in terms.items():
                rows.append(idx)
                cols.append(k)
                vals.append(sign * v)

        for r in model.constraints:
            if r.sense is Sense.EQ:
                push(a_rows, a_cols, a_vals, r.expr.terms, 1.0, len(b))
                b.append(r.rhs)
            else:
                sign = 1.0 if r.sense is Sense.LE else -1.0
                push(g_rows, g_cols, g_vals, r.expr.terms, sign, len(h))
                h.append(sign * r.rhs)
        for v in model.variables:
            if v.kind is VarKind.BINARY:
                continue  # enforced through the binary set
            if np.isfinite(v.ub):
                g_rows.append(len(h)); g_cols.append(v.id); g_vals.append(1.0); h.append(v.ub)
            if np.isfinite(v.lb):
                g_rows.append(len(h)); g_cols.append(v.id); g_vals.append(-1.0); h.append(-v.lb)
        c = matrix(0.0, (n, 1))
        for k, v in model.objective.terms.items():
            c[k] += v
        G = spmatrix(g_vals, g_rows, g_cols, (len(h), n)) if h else spmatrix([], [], [], (0, n))
        A = spmatrix(a_vals, a_rows, a_cols, (len(b), n)) if b else spmatrix([], [], [], (0, n))
        binaries = {v.id for v in model.variables if v.kind is VarKind.BINARY}
        glpk.options["msg_lev"] = "GLP_MSG_OFF"
        glpk.options["mip_gap"] = 1e-9
        if time_limit is not None:
            glpk.options["tm_lim"] = int(time_limit * 1000)
        t0 = time.perf_counter()
        status, x = glpk.ilp(c, G, matrix(h, tc="d") if h else matrix(0.0, (0, 1)), A,
                             matrix(b, tc="d") if b else matrix(0.0, (0, 1)), set(), binaries)
        wall = time.perf_counter() - t0
        stats = {"backend": self.name, "wall_s": wall, "message": status}
        if status == "optimal":
            xv = np.array(x).reshape(-1)
            return BackendResult("optimal", xv, float(model.objective.value(xv)), stats)
        if status in ("infeasible", "undefined"):  # GLPK reports "undefined" when no integer point exists
            return BackendResult("infeasible", None, None, stats)
        return BackendResult("error", None, None, stats)


class OracleBackend:
    """Exhaustive enumeration, for instances small enough to enumerate."""

    name = "oracle"
    solves_mode = True

    def __init__(self, budget: int | None = None):
        self.budget = budget

    def optimize(self, model: MilpModel, time_limit: float | None = None) -> BackendResult:
        from ..oracle import DEFAULT_BUDGET, NoFeasible, enumerate_optimum

        scen = model.metadata["scenario"]
        t0 = time.perf_counter()
        try:
            res = enumerate_optimum(scen, model.mode, hour=model.metadata["hour"],
                                    budget=self.budget or DEFAULT_BUDGET)
        except NoFeasible:
            return BackendResult("infeasible", stats={"backend": self.name, "wall_s": time.perf_counter() - t0})
        stats = {"backend": self.name, "wall_s": time.perf_counter() - t0, "feasible": res.feasible_count,
                 "visited": res.visited}
        obj = res.sum_fh_us if model.mode.value == "FhLatencyMin" else res.energy_wh
        return BackendResult("optimal", None, obj, stats, solution=res.solution)


BACKENDS = {"highs": HighsBackend, "glpk": GlpkBackend, "oracle": OracleBackend}


def get_backend(name: str) -> Backend:
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
