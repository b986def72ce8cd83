"""Exhaustive enumeration of indicator assignments, for cross-checking."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import replace

import numpy as np

from ..milp import BINARY, LP, ModelInstance
from . import simplex as sx
from .lp import model_arrays, start_at_upper
from .solution import INFEASIBLE, OPTIMAL, Solution, SolverError, SolverParams


def induced_lp(m: ModelInstance, s_values: dict[str, int]) -> ModelInstance:
    """Pure LP in ``y``: rows with ``s = 0`` enforced, rows with ``s = 1`` dropped."""
    rows = tuple(replace(r, s_var=None, s_coef=0.0) for r in m.rows
                 if r.s_var is None or s_values[r.s_var] == 0)
    variables = tuple(v for v in m.variables if v.kind != BINARY)
    return replace(m, kind=LP, variables=variables, rows=rows, objective=(), offsets=())


def brute_force(m: ModelInstance, max_binaries: int = 20, params: SolverParams = SolverParams()) -> Solution:
    """Exact optimum by trying every 0/1 assignment of the indicators.

    Assignments are visited in order of increasing cost, so the first one
    whose induced LP in ``y`` is feasible is optimal. An assignment that
    enforces a superset of some already-infeasible row set is rejected
    without another LP solve.
    """
    t0 = time.perf_counter()
    if m.kind == LP:
        raise SolverError("brute force needs a MILP model")
    binaries = [v.name for v in m.variables if v.kind == BINARY]
    if len(binaries) > max_binaries:
        raise SolverError(f"brute force limited to {max_binaries} binaries, model has {len(binaries)}")
    pure = induced_lp(m, {n: 0 for n in binaries})
    names, A, b, lo, hi, _ = model_arrays(pure)
    upper_start = start_at_upper(pure)
    bit_of = {n: k for k, n in enumerate(binaries)}
    row_bit = np.array([bit_of[r.s_var] if r.s_var is not None else -1 for r in m.rows], dtype=int)

    weight = m.objective_map
    candidates = []
    for bits in itertools.product((0, 1), repeat=len(binaries)):
        cost = math.fsum(weight.get(n, 0.0) * bit for n, bit in zip(binaries, bits))
        candidates.append((cost, bits))
    candidates.sort(key=lambda item: item[0])

    # seed the pruning list with single rows and row pairs that no y satisfies
    always = row_bit < 0
    seeds = []
    for combo in itertools.chain(((k,) for k in range(len(binaries))),
                                 itertools.combinations(range(len(binaries)), 2)):
        mask = sum(1 << k for k in combo)
        if any((seed & ~mask) == 0 for seed in seeds):
            continue
        keep = always | np.isin(row_bit, combo)
        res = sx.simplex(np.zeros(len(names)), A[keep], b[keep], lo, hi,
                         start_at_upper=upper_start, feas_tol=params.feas_tol)
        if res.status == sx.INFEASIBLE:
            seeds.append(mask)
    infeasible_masks = np.array(seeds, dtype=np.int64)
    checked = 0
    for cost, bits in candidates:
        enforced_mask = sum(1 << k for k, bit in enumerate(bits) if bit == 0)
        if infeasible_masks.size and np.any((infeasible_masks & ~enforced_mask) == 0):
            continue
        bits_arr = np.array(bits, dtype=int)
        keep = (row_bit < 0) | (bits_arr[np.maximum(row_bit, 0)] == 0 if len(bits) else True)
        checked += 1
        Ak, bk = A[keep], b[keep]
        if np.all(Ak @ hi >= bk - params.feas_tol):
            y = hi
        else:
            res = sx.simplex(np.zeros(len(names)), Ak, bk, lo, hi, start_at_upper=upper_start,
                             feas_tol=params.feas_tol)
            if res.status != sx.OPTIMAL:
                infeasible_masks = np.append(infeasible_masks, np.int64(enforced_mask))
                continue
            y = res.x
        var = m.var_by_name
        obj = cost + m.objective_offset
        return Solution(y={var[n].transmitter_id: float(v) for n, v in zip(names, y)},
                        s={var[n].pair: float(bit) for n, bit in zip(binaries, bits)},
                        objective=obj, lower_bound=obj, status=OPTIMAL, nodes=checked,
                        wall_time=time.perf_counter() - t0, kind=m.kind)
    return Solution(y={}, s={}, objective=math.inf, lower_bound=math.inf, status=INFEASIBLE,
                    nodes=checked, wall_time=time.perf_counter() - t0, kind=m.kind)
