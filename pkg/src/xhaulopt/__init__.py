"""Energy- and latency-aware configuration of disaggregated 5G RAN crosshaul."""

from .feasibility import Assignment, EvalReport, Mode, Solution, check, evaluate
from .scenario_io import Scenario, demand_at_hour, load_scenario
from .topology import Topology, k_shortest_paths, load_topology

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "EvalReport",
    "Mode",
    "Scenario",
    "Solution",
    "Topology",
    "check",
    "demand_at_hour",
    "evaluate",
    "k_shortest_paths",
    "load_scenario",
    "load_topology",
]
