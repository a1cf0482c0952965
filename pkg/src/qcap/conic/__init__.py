"""Conic-program construction and the interior-point solver."""
from .program import ConicProgram, derealify, realify
from .solver import (
    INFEASIBLE,
    MAX_ITER,
    OPTIMAL,
    UNBOUNDED,
    ConicSolution,
    SolverError,
    solve,
)

__all__ = [
    "ConicProgram",
    "ConicSolution",
    "SolverError",
    "realify",
    "derealify",
    "solve",
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "MAX_ITER",
]
