"""LP solves of whole models, one block at a time."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from ..milp import BINARY, ModelInstance, split_blocks
from . import simplex as sx
from .solution import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, Solution, SolverError,
                       SolverParams, worst_status)


def model_arrays(m: ModelInstance):
    """Dense scaled arrays ``(names, A, b, lower, upper, c)`` for ``A x >= b``."""
    names = [v.name for v in m.variables]
    col = {name: k for k, name in enumerate(names)}
    A = np.zeros((len(m.rows), len(names)))
    b = np.empty(len(m.rows))
    for i, row in enumerate(m.rows):
        for name, coef in row.coefs:
            A[i, col[name]] += coef * row.scale
        b[i] = row.rhs * row.scale
    lower = np.array([v.lower for v in m.variables], dtype=float)
    upper = np.array([v.upper for v in m.variables], dtype=float)
    c = np.zeros(len(names))
    for name, coef in m.objective:
        c[col[name]] += coef
    return names, A, b, lower, upper, c


def start_at_upper(m: ModelInstance) -> np.ndarray:
    # power factors start from the current configuration (y = 1)
    return np.array([v.transmitter_id is not None for v in m.variables], dtype=bool)


def _solve_block(m: ModelInstance, params: SolverParams):
    if any(v.kind == BINARY for v in m.variables):
        raise SolverError("solve_lp needs a model without binary variables")
    names, A, b, lower, upper, c = model_arrays(m)
    res = sx.simplex(c, A, b, lower, upper, start_at_upper=start_at_upper(m),
                     feas_tol=params.feas_tol)
    status = {sx.OPTIMAL: OPTIMAL, sx.INFEASIBLE: INFEASIBLE}.get(res.status, ITERATION_LIMIT)
    values = dict(zip(names, res.x.tolist()))
    obj = m.objective_value(values) if status != INFEASIBLE else np.inf
    return status, values, obj, res.iterations


def map_blocks(fn: Callable, blocks: Sequence, params: SolverParams, *args) -> list:
    """Apply ``fn(block, params, *args)`` to each block, optionally in worker processes."""
    if params.jobs > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=params.jobs) as pool:
            return list(pool.map(fn, blocks, [params] * len(blocks), *[[a] * len(blocks) for a in args]))
    return [fn(block, params, *args) for block in blocks]


def to_solution(m: ModelInstance, values: dict, **kw) -> Solution:
    var = m.var_by_name
    y = {var[n].transmitter_id: v for n, v in values.items() if var[n].transmitter_id is not None}
    s = {var[n].pair: v for n, v in values.items() if var[n].pair is not None}
    return Solution(y=y, s=s, kind=m.kind, **kw)


def solve_lp(m: ModelInstance, params: SolverParams = SolverParams(), decompose: bool = True) -> Solution:
    """Optimal basic solution of an LP model (LP variant, relaxation or stage-2 model)."""
    t0 = time.perf_counter()
    blocks = split_blocks(m) if decompose else [m]
    results = map_blocks(_solve_block, blocks, params)
    values = {}
    for _, vals, _, _ in results:
        values.update(vals)
    status = worst_status(r[0] for r in results)
    obj = m.objective_value(values) if status != INFEASIBLE else np.inf
    return to_solution(m, values, objective=obj, lower_bound=obj, status=status,
                       wall_time=time.perf_counter() - t0,
                       iterations=sum(r[3] for r in results))
