"""Minimum-power placement solvers."""
from ._data import Objective, build_search_data
from .bnb import Budget, lower_bound, solve_branch_and_bound
from .exhaustive import (DEFAULT_ENUMERATION_CAP, EnumerationCapExceeded,
                         enumerate_optima, solve_exhaustive)
from .heuristics import InfeasibleStart, local_search_improve, solve_bfd, solve_local
from .kernel import BACKEND
from .result import SolveResult, Status

__all__ = [
    "BACKEND", "Budget", "DEFAULT_ENUMERATION_CAP", "EnumerationCapExceeded",
    "InfeasibleStart", "Objective", "SolveResult", "Status", "build_search_data",
    "enumerate_optima", "local_search_improve", "lower_bound", "solve_bfd",
    "solve_branch_and_bound", "solve_exhaustive", "solve_local",
]
