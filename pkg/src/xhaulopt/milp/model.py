"""Solver-neutral MILP representation: variables, linear expressions, rows."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping

import numpy as np
from scipy import sparse

from ..feasibility import Mode


class VarKind(str, enum.Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Sense(str, enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class VarRef:
    id: int
    name: str
    kind: VarKind = VarKind.CONTINUOUS
    lb: float = 0.0
    ub: float = math.inf

    def __add__(self, other):
        return LinExpr.of(self) + other

    __radd__ = __add__

    def __sub__(self, other):
        return LinExpr.of(self) - other

    def __rsub__(self, other):
        return (-1.0) * LinExpr.of(self) + other

    def __mul__(self, c: float):
        return LinExpr.of(self, c)

    __rmul__ = __mul__

    def __neg__(self):
        return LinExpr.of(self, -1.0)


class LinExpr:
    """sum(coef * var) + constant. Zero coefficients are kept on purpose."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[int, float] | None = None, constant: float = 0.0):
        self.terms: dict[int, float] = dict(terms or {})
        self.constant = float(constant)

    @classmethod
    def of(cls, v: VarRef, coef: float = 1.0) -> "LinExpr":
        return cls({v.id: float(coef)})

    @classmethod
    def sum(cls, items: Iterable) -> "LinExpr":
        out = cls()
        for it in items:
            out.add(it)
        return out

    def add(self, item, coef: float = 1.0) -> "LinExpr":
        """In-place ``self += coef * item``."""
        if isinstance(item, VarRef):
            self.terms[item.id] = self.terms.get(item.id, 0.0) + coef
        elif isinstance(item, LinExpr):
            for k, v in item.terms.items():
                self.terms[k] = self.terms.get(k, 0.0) + coef * v
            self.constant += coef * item.constant
        else:
            self.constant += coef * float(item)
        return self

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.constant)

    def __add__(self, other):
        return self.copy().add(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().add(other, -1.0)

    def __rsub__(self, other):
        return (self * -1.0).add(other)

    def __mul__(self, c: float):
        return LinExpr({k: v * c for k, v in self.terms.items()}, self.constant * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def value(self, x) -> float:
        return math.fsum([self.constant] + [c * x[k] for k, c in self.terms.items()])

    def __repr__(self):
        return f"LinExpr({self.terms}, {self.constant})"


@dataclass
class ConstraintRow:
    name: str
    expr: LinExpr  # constant already folded into rhs
    sense: Sense
    rhs: float
    tag: str

    def slack(self, x) -> float:
        lhs = self.expr.value(x)
        if self.sense is Sense.LE:
            return self.rhs - lhs
        if self.sense is Sense.GE:
            return lhs - self.rhs
        return -abs(lhs - self.rhs)


class ModelTooLarge(ValueError):
    """The model would exceed the configured variable budget."""


@dataclass
class MilpModel:
    name: str = "xhaul"
    mode: Mode = Mode.ENERGY
    variables: list[VarRef] = field(default_factory=list)
    constraints: list[ConstraintRow] = field(default_factory=list)
    objective: LinExpr = field(default_factory=LinExpr)
    metadata: dict[str, Any] = field(default_factory=dict)
    max_vars: int | None = None
    _names: dict[str, int] = field(default_factory=dict, repr=False)

    # -- construction ------------------------------------------------------------
    def add_var(self, name: str, kind: VarKind = VarKind.CONTINUOUS, lb: float = 0.0, ub: float = math.inf) -> VarRef:
        if name in self._names:
            raise ValueError(f"duplicate variable name {name}")
        if kind is VarKind.BINARY:
            lb, ub = 0.0, 1.0
        if self.max_vars is not None and len(self.variables) >= self.max_vars:
            raise ModelTooLarge(f"more than {self.max_vars} variables")
        v = VarRef(len(self.variables), name, kind, float(lb), float(ub))
        self.variables.append(v)
        self._names[name] = v.id
        return v

    def binary(self, name: str) -> VarRef:
        return self.add_var(name, VarKind.BINARY)

    def add_row(self, expr, sense: Sense | str, rhs: float, tag: str, name: str | None = None) -> ConstraintRow:
        expr = expr.copy() if isinstance(expr, LinExpr) else LinExpr.sum([expr])
        rhs = float(rhs) - expr.constant
        expr.constant = 0.0
        row = ConstraintRow(name or f"{tag}.{len(self.constraints)}", expr, Sense(sense), rhs, tag)
        self.constraints.append(row)
        return row

    def var(self, name: str) -> VarRef:
        return self.variables[self._names[name]]

    def has_var(self, name: str) -> bool:
        return name in self._names

    # -- views --------------------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    def rows_tagged(self, tag: str) -> list[ConstraintRow]:
        return [r for r in self.constraints if r.tag == tag]

    def tag_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.constraints:
            out[r.tag] = out.get(r.tag, 0) + 1
        return dict(sorted(out.items()))

    def derive(self, objective: LinExpr | None = None, extra_rows: Iterable[ConstraintRow] = (),
               fixed: Mapping[int, float] | None = None, relax: bool = False) -> "MilpModel":
        """Shallow copy with another objective, extra rows, fixed variables or dropped integrality."""
        variables = list(self.variables)
        if fixed:
            for i, val in fixed.items():
                variables[i] = replace(variables[i], lb=val, ub=val)
        if relax:
            variables = [replace(v, kind=VarKind.CONTINUOUS) for v in variables]
        return MilpModel(
            name=self.name,
            mode=self.mode,
            variables=variables,
            constraints=list(self.constraints) + list(extra_rows),
            objective=self.objective if objective is None else objective,
            metadata=self.metadata,
            max_vars=None,
            _names=self._names,
        )

    def to_arrays(self):
        """(c, A, row_lb, row_ub, var_lb, var_ub, integrality) for array-based solvers."""
        n = self.n_vars
        c = np.zeros(n)
        for k, v in self.objective.terms.items():
            c[k] += v
        rows, cols, vals = [], [], []
        lo = np.empty(self.n_rows)
        hi = np.empty(self.n_rows)
        for i, r in enumerate(self.constraints):
            for k, v in r.expr.terms.items():
                rows.append(i)
                cols.append(k)
                vals.append(v)
            lo[i] = r.rhs if r.sense is not Sense.LE else -np.inf
            hi[i] = r.rhs if r.sense is not Sense.GE else np.inf
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, n))
        vlb = np.array([v.lb for v in self.variables])
        vub = np.array([v.ub for v in self.variables])
        integrality = np.array([1 if v.kind is VarKind.BINARY else 0 for v in self.variables])
        return c, A, lo, hi, vlb, vub, integrality

    def max_violation(self, x) -> float:
        worst = 0.0
        for r in self.constraints:
            worst = max(worst, -r.slack(x))
        for v in self.variables:
            worst = max(worst, v.lb - x[v.id], x[v.id] - v.ub)
        return worst
