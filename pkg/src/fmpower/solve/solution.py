from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

OPTIMAL = "optimal"
GAP_REACHED = "gap_reached"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"

# worst first, used when merging per-block outcomes
_STATUS_RANK = {INFEASIBLE: 0, ITERATION_LIMIT: 1, GAP_REACHED: 2, OPTIMAL: 3}


class SolverError(Exception):
    pass


@dataclass(frozen=True)
class SolverParams:
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    gap_percent: float = 1.0
    node_limit: int = 100_000
    time_limit: float = 600.0
    jobs: int = 1

    def __post_init__(self):
        if not (self.feas_tol > 0 and self.int_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.gap_percent >= 0:
            raise ValueError("gap must be >= 0")


@dataclass(frozen=True)
class Solution:
    """Power factors ``y`` (by transmitter id) and indicators ``s`` (by pair)."""

    y: dict[str, float]
    s: dict[tuple[str, str], float]
    objective: float
    lower_bound: float
    status: str
    nodes: int = 0
    wall_time: float = 0.0
    kind: str = ""
    radiated_power_w: Optional[float] = None
    iterations: int = 0

    @property
    def gap(self) -> float:
        return gap_percent(self.objective, self.lower_bound)

    @property
    def feasible(self) -> bool:
        return self.status in (OPTIMAL, GAP_REACHED) or (
            self.status == ITERATION_LIMIT and math.isfinite(self.objective))


def gap_percent(ub: float, lb: float) -> float:
    """``100 (UB - LB) / LB``; zero when the bounds meet, infinite when LB is 0 but UB is not."""
    if not (math.isfinite(ub) and math.isfinite(lb)):
        return math.inf
    diff = max(0.0, ub - lb)
    if diff <= 1e-9 * max(1.0, abs(ub)):
        return 0.0
    if lb <= 0:
        return math.inf
    return 100.0 * diff / lb


def worst_status(statuses) -> str:
    return min(statuses, key=_STATUS_RANK.__getitem__, default=OPTIMAL)
