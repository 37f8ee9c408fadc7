"""MILP formulation: model container, builder, solver backends and text export."""

from .backends import BackendUnavailable, GlpkBackend, HighsBackend, OracleBackend, get_backend
from .builder import build, worst_case_energy
from .export import export, parse
from .model import ConstraintRow, LinExpr, MilpModel, ModelTooLarge, Sense, VarKind, VarRef
from .solve import BackendFailure, MilpInfeasible, MilpResult, decode, solve, solve_scenario

__all__ = [
    "BackendFailure", "BackendUnavailable", "ConstraintRow", "GlpkBackend", "HighsBackend", "LinExpr",
    "MilpInfeasible", "MilpModel", "MilpResult", "ModelTooLarge", "OracleBackend", "Sense", "VarKind", "VarRef",
    "build", "decode", "export", "get_backend", "parse", "solve", "solve_scenario", "worst_case_energy",
]
