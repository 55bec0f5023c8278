"""Hybrid Cuckoo Search and capacitated K-means for the capacitated p-median problem."""

__version__ = "0.1.0"

from .cuckoo import SolveResult, SolverParams, solve  # noqa: E402
from .errors import (  # noqa: E402
    ContractViolation,
    CPMPError,
    InfeasibleInstanceError,
    NoFeasibleSolution,
    OracleTooLarge,
    ParameterError,
    ParseError,
    SeedingFailed,
    SelectionUndefined,
)
from .instance import (  # noqa: E402
    DistanceMatrix,
    DistanceMode,
    Nest,
    Node,
    ProblemInstance,
    build_distance_matrix,
    check_feasibility,
    evaluate_cost,
)
from .oracle import enumerate_optimal  # noqa: E402

__all__ = [
    "CPMPError",
    "ContractViolation",
    "DistanceMatrix",
    "DistanceMode",
    "InfeasibleInstanceError",
    "Nest",
    "NoFeasibleSolution",
    "Node",
    "OracleTooLarge",
    "ParameterError",
    "ParseError",
    "ProblemInstance",
    "SeedingFailed",
    "SelectionUndefined",
    "SolveResult",
    "SolverParams",
    "build_distance_matrix",
    "check_feasibility",
    "enumerate_optimal",
    "evaluate_cost",
    "solve",
]
