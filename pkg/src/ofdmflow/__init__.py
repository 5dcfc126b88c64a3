"""Max-min OFDM subcarrier assignment and robust generalized network flow."""

from .lp_core import LpProblem, LpSolution, MilpSolution, solve_lp, solve_milp
from .maxmin_assign import Assignment, RateMatrix, brute_force_maxmin, solve_maxmin, static_assignment

__version__ = "0.1.0"
