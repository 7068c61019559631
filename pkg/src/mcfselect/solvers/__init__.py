"""The seven minimum cost flow algorithms behind one ``solve`` entry point."""
from __future__ import annotations

from ..graph import MCFInstance
from .base import (
    DEFAULT_OPTIONS,
    AlgorithmId,
    InvariantViolation,
    IterationLimitExceeded,
    SolveResult,
    SolverError,
    SolverOptions,
    SolverTimeout,
    Status,
)
from .cost_scaling import solve_cs2
from .cycle_canceling import solve_cat, solve_mmcc, solve_scc
from .network_simplex import SpanningTreeBasis, solve_ns
from .shortest_paths import solve_cas, solve_ssp
from .subroutines import (
    bellman_ford_negative_cycle,
    certify_optimal,
    dijkstra_with_potentials,
    max_flow,
    max_flow_feasibility,
    min_mean_cycle,
)

SOLVERS = {
    AlgorithmId.SCC: solve_scc,
    AlgorithmId.MMCC: solve_mmcc,
    AlgorithmId.CAT: solve_cat,
    AlgorithmId.SSP: solve_ssp,
    AlgorithmId.CAS: solve_cas,
    AlgorithmId.NS: solve_ns,
    AlgorithmId.CS2: solve_cs2,
}


def solve(algorithm, instance: MCFInstance, options: SolverOptions = DEFAULT_OPTIONS) -> SolveResult:
    """Run one algorithm, given as an AlgorithmId, its code, or its name."""
    return SOLVERS[AlgorithmId.parse(algorithm)](instance, options)


__all__ = [
    "AlgorithmId", "InvariantViolation", "IterationLimitExceeded", "SOLVERS", "SolveResult", "SolverError",
    "SolverOptions", "SolverTimeout", "SpanningTreeBasis", "Status", "bellman_ford_negative_cycle",
    "certify_optimal", "dijkstra_with_potentials", "max_flow", "max_flow_feasibility", "min_mean_cycle", "solve",
    "solve_cas", "solve_cat", "solve_cs2", "solve_mmcc", "solve_ns", "solve_scc", "solve_ssp",
]
