"""Threshold adoption on networks with temporary or fixed-duration subsidies."""
from .dynamics import (
    AdoptionState,
    BoundViolationError,
    ConvergenceReport,
    SubsidySchedule,
    Trajectory,
    run,
)
from .graph_core import Graph, GraphFormatError, ThresholdProfile, derive_thresholds
from .optimize import InfeasibleError, PlanningProblem, PlanResult, SolveTimeout, solve_exact

__version__ = "0.1.0"

__all__ = [
    "AdoptionState",
    "BoundViolationError",
    "ConvergenceReport",
    "Graph",
    "GraphFormatError",
    "InfeasibleError",
    "PlanResult",
    "PlanningProblem",
    "SolveTimeout",
    "SubsidySchedule",
    "ThresholdProfile",
    "Trajectory",
    "derive_thresholds",
    "run",
    "solve_exact",
]
