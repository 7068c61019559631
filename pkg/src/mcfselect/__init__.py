"""Minimum cost flow solver portfolio with a learned algorithm selector."""
from .dimacs import DimacsError, parse_dimacs, read_dimacs, save_dimacs, write_dimacs
from .graph import (
    FeasibilityReport,
    MCFInstance,
    ResidualNetwork,
    check_epsilon_optimality,
    excess,
    flow_cost,
    reduced_cost,
    residual_network,
    validate_flow,
)
from .solvers import AlgorithmId, SolveResult, SolverOptions, Status, certify_optimal, solve

__version__ = "0.1.0"
