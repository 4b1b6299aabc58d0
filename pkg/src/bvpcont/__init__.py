"""Continuity of solutions of linear boundary-value problems in a parameter."""

from .function_space import Interval, ck_distance, ck_norm, expr_function
from .limits import ProblemFamily, check_conditions, convergence_study, estimate_kappa
from .reduction import HigherOrderSystem
from .solver import DegenerateProblem, check_condition0, factorize, solve_bvp

__version__ = "0.1.0"

__all__ = [
    "DegenerateProblem",
    "HigherOrderSystem",
    "Interval",
    "ProblemFamily",
    "check_condition0",
    "check_conditions",
    "ck_distance",
    "ck_norm",
    "convergence_study",
    "estimate_kappa",
    "expr_function",
    "factorize",
    "solve_bvp",
]
