"""LP and free-MPS text export of a :class:`MilpModel`, plus a parser for our own output.

Coefficients are written with ``repr`` so a write/parse cycle is exact.
Row tags and the objective constant travel in comment lines, which other
tools ignore.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .model import ConstraintRow, LinExpr, MilpModel, Sense, VarKind

_BAD = re.compile(r"[^A-Za-z0-9_.~]")
_SENSE_LP = {Sense.LE: "<=", Sense.EQ: "=", Sense.GE: ">="}
_SENSE_MPS = {Sense.LE: "L", Sense.EQ: "E", Sense.GE: "G"}


def safe_name(name: str) -> str:
    # '-' would read as an operator in LP files
    return _BAD.sub("_", name.replace("-", "~"))


def _orig(name: str) -> str:
    return name.replace("~", "-")


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _terms(expr: LinExpr, names: list[str]) -> str:
    if not expr.terms:
        return "0 " + names[0] if names else "0"
    parts = []
    for k, c in expr.terms.items():
        parts.append(f"{'-' if c < 0 or (c == 0 and math.copysign(1, c) < 0) else '+'} {_num(abs(c))} {names[k]}")
    return " ".join(parts)


def to_lp(model: MilpModel) -> str:
    names = [safe_name(v.name) for v in model.variables]
    out = [f"\\ model {model.name}", f"\\ mode {model.mode.value}",
           f"\\ objective_constant {_num(model.objective.constant)}", "Minimize", f" obj: {_terms(model.objective, names)}",
           "Subject To"]
    for r in model.constraints:
        out.append(f"\\ tag {r.tag}")
        out.append(f" {safe_name(r.name)}: {_terms(r.expr, names)} {_SENSE_LP[r.sense]} {_num(r.rhs)}")
    out.append("Bounds")
    for v, n in zip(model.variables, names):
        if v.kind is VarKind.BINARY:
            continue
        lb = "-inf" if math.isinf(v.lb) else _num(v.lb)
        ub = "+inf" if math.isinf(v.ub) else _num(v.ub)
        out.append(f" {lb} <= {n} <= {ub}")
    out.append("Binaries")
    out.extend(f" {n}" for v, n in zip(model.variables, names) if v.kind is VarKind.BINARY)
    out.append("End")
    return "\n".join(out) + "\n"


def to_mps(model: MilpModel) -> str:
    names = [safe_name(v.name) for v in model.variables]
    rnames = [safe_name(r.name) for r in model.constraints]
    cols: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for k, c in model.objective.terms.items():
        cols[k].append(("obj", c))
    for rn, r in zip(rnames, model.constraints):
        for k, c in r.expr.terms.items():
            cols[k].append((rn, c))
    out = [f"* objective_constant {_num(model.objective.constant)}", f"* mode {model.mode.value}",
           f"NAME {safe_name(model.name)}", "ROWS", " N obj"]
    for rn, r in zip(rnames, model.constraints):
        out.append(f"* tag {r.tag}")
        out.append(f" {_SENSE_MPS[r.sense]} {rn}")
    out.append("COLUMNS")
    in_int = False
    for v, n, entries in zip(model.variables, names, cols):
        binary = v.kind is VarKind.BINARY
        if binary != in_int:
            out.append(f" MARKER 'MARKER' {'INTORG' if binary else 'INTEND'}")
            in_int = binary
        if not entries:
            entries = [("obj", 0.0)]
        out.extend(f" {n} {rn} {_num(c)}" for rn, c in entries)
    if in_int:
        out.append(" MARKER 'MARKER' INTEND")
    out.append("RHS")
    out.extend(f" RHS {rn} {_num(r.rhs)}" for rn, r in zip(rnames, model.constraints))
    out.append("BOUNDS")
    for v, n in zip(model.variables, names):
        if v.kind is VarKind.BINARY:
            out.append(f" BV BND {n}")
            continue
        if math.isinf(v.lb) and v.lb < 0:
            out.append(f" MI BND {n}")
        elif v.lb != 0.0:
            out.append(f" LO BND {n} {_num(v.lb)}")
        if not math.isinf(v.ub):
            out.append(f" UP BND {n} {_num(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export(model: MilpModel, fmt: str = "lp") -> str:
    fmt = fmt.lower()
    if fmt in ("lp", "lp-text"):
        return to_lp(model)
    if fmt in ("mps", "mps-text"):
        return to_mps(model)
    raise ValueError(f"unknown export format {fmt!r}")


# -- parsing ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class ParsedModel:
    """Name-keyed view of an exported model, enough to compare rows."""

    objective: dict[str, float]
    objective_constant: float
    rows: tuple[ConstraintRow, ...]  # expr terms keyed by variable name
    bounds: dict[str, tuple[float, float]]
    binaries: frozenset[str]

    def row_multiset(self):
        return sorted((r.name, r.tag, r.sense.value, r.rhs, tuple(sorted(r.expr.terms.items()))) for r in self.rows)


def row_multiset(model: MilpModel):
    """The same canonical row view for an in-memory model."""
    names = [v.name for v in model.variables]
    return sorted((r.name, r.tag, r.sense.value, r.rhs, tuple(sorted((names[k], c) for k, c in r.expr.terms.items())))
                  for r in model.constraints)


def _parse_terms(text: str) -> dict[str, float]:
    toks = text.split()
    out: dict[str, float] = {}
    i = 0
    while i < len(toks):
        sign = -1.0 if toks[i] == "-" else 1.0
        coef, name = float(toks[i + 1]), _orig(toks[i + 2])
        out[name] = out.get(name, 0.0) + sign * coef
        i += 3
    return out


def parse_lp(text: str) -> ParsedModel:
    section, tag, const = None, "", 0.0
    obj: dict[str, float] = {}
    rows, bounds, bins = [], {}, set()
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            parts = line[1:].split()
            if parts[:1] == ["tag"]:
                tag = parts[1]
            elif parts[:1] == ["objective_constant"]:
                const = float(parts[1])
            continue
        if line in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
            section = line
            continue
        if not line:
            continue
        if section == "Minimize":
            body = line.split(":", 1)[1].strip()
            obj = {} if body.startswith("0") else _parse_terms(body)
        elif section == "Subject To":
            name, body = line.split(":", 1)
            lhs, op, rhs = body.rsplit(None, 2)
            terms = {} if lhs.strip().startswith("0") else _parse_terms(lhs)
            expr = LinExpr()
            expr.terms = terms  # name-keyed on purpose
            rows.append(ConstraintRow(_orig(name.strip()), expr, Sense(op), float(rhs), tag))
        elif section == "Bounds":
            lb, _, n, _, ub = line.split()
            bounds[_orig(n)] = (float(lb), float(ub))
        elif section == "Binaries":
            bins.add(_orig(line))
    return ParsedModel(obj, const, tuple(rows), bounds, frozenset(bins))


def parse_mps(text: str) -> ParsedModel:
    section, tag, const = None, "", 0.0
    senses: dict[str, Sense] = {}
    tags: dict[str, str] = {}
    order: list[str] = []
    terms: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    obj: dict[str, float] = {}
    bounds: dict[str, list[float]] = {}
    bins: set[str] = set()
    inv = {v: k for k, v in _SENSE_MPS.items()}
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("*"):
            parts = line[1:].split()
            if parts[:1] == ["tag"]:
                tag = parts[1]
            elif parts[:1] == ["objective_constant"]:
                const = float(parts[1])
            continue
        if not raw.startswith(" "):
            section = line.split()[0] if line else section
            continue
        f = line.split()
        if section == "ROWS":
            if f[0] == "N":
                continue
            senses[f[1]] = inv[f[0]]
            tags[f[1]] = tag
            order.append(f[1])
            terms[f[1]] = {}
        elif section == "COLUMNS":
            if f[1] == "'MARKER'":
                continue
            col = _orig(f[0])
            bounds.setdefault(col, [0.0, math.inf])
            if f[1] == "obj":
                if float(f[2]) != 0.0 or col in obj:
                    obj[col] = obj.get(col, 0.0) + float(f[2])
            else:
                terms[f[1]][col] = float(f[2])
        elif section == "RHS":
            rhs[f[1]] = float(f[2])
        elif section == "BOUNDS":
            kind, col = f[0], _orig(f[2])
            b = bounds.setdefault(col, [0.0, math.inf])
            if kind == "BV":
                bins.add(col)
                b[:] = [0.0, 1.0]
            elif kind == "MI":
                b[0] = -math.inf
            elif kind == "LO":
                b[0] = float(f[3])
            elif kind == "UP":
                b[1] = float(f[3])
    rows = []
    for rn in order:
        expr = LinExpr()
        expr.terms = terms[rn]
        rows.append(ConstraintRow(_orig(rn), expr, senses[rn], rhs.get(rn, 0.0), tags[rn]))
    return ParsedModel(obj, const, tuple(rows), {k: (v[0], v[1]) for k, v in bounds.items() if k not in bins},
                       frozenset(bins))


def parse(text: str, fmt: str = "lp") -> ParsedModel:
    return parse_lp(text) if fmt.lower().startswith("lp") else parse_mps(text)
