"""Built-in solvers for power-reduction models."""
from .branch import lp_relaxation, solve_milp, solve_milp_traced
from .external import SolutionError, import_external_solution, read_lp_model, write_solution
from .lp import solve_lp
from .oracle import brute_force
from .solution import (GAP_REACHED, INFEASIBLE, ITERATION_LIMIT, OPTIMAL, Solution, SolverError,
                       SolverParams, gap_percent)
from .stage2 import power_minimization_stage, radiated_power

__all__ = [
    "GAP_REACHED", "INFEASIBLE", "ITERATION_LIMIT", "OPTIMAL", "Solution", "SolutionError",
    "SolverError", "SolverParams", "brute_force", "gap_percent", "import_external_solution",
    "lp_relaxation", "power_minimization_stage", "radiated_power", "read_lp_model", "solve_lp",
    "solve_milp", "solve_milp_traced", "write_solution",
]
