"""Best-first branch-and-bound over the non-coverage indicators.

A row whose indicator is fixed to 0 is enforced as written, one fixed to 1
is dropped, so the literal big-M product never enters the arithmetic.
While an indicator is still free its row is relaxed to
``a.y + M_tight * s >= b`` where ``M_tight = b - min_{y in box} a.y`` is
the smallest coefficient that makes ``s = 1`` redundant.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from ..coverage import SERVED_RTOL
from ..milp import BINARY, CONTINUOUS, LP, ModelInstance, split_blocks
from . import simplex as sx
from .lp import map_blocks, to_solution
from .solution import (GAP_REACHED, ITERATION_LIMIT, OPTIMAL, Solution,
                       SolverParams, gap_percent, worst_status)

FREE = -1


@dataclass
class BlockResult:
    status: str
    values: dict
    upper: float
    lower: float
    nodes: int
    trace: list


class _BlockProblem:
    def __init__(self, m: ModelInstance):
        self.m = m
        self.y_vars = [v for v in m.variables if v.kind != BINARY]
        self.s_vars = [v for v in m.variables if v.kind == BINARY]
        ycol = {v.name: k for k, v in enumerate(self.y_vars)}
        s_index = {v.name: k for k, v in enumerate(self.s_vars)}
        nr, ny = len(m.rows), len(self.y_vars)
        self.A = np.zeros((nr, ny))
        self.b = np.empty(nr)
        self.pos = np.zeros((nr, ny))
        self.neg = np.zeros((nr, ny))
        self.lhs_const = np.empty(nr)
        self.rhs_const = np.empty(nr)
        self.row_s = np.full(nr, -1)
        for i, row in enumerate(m.rows):
            for name, coef in row.terms:
                j = ycol[name]
                self.A[i, j] += coef * row.scale
                if coef > 0:
                    self.pos[i, j] += coef
                else:
                    self.neg[i, j] -= coef
            self.b[i] = row.rhs * row.scale
            self.lhs_const[i] = row.lhs_const
            self.rhs_const[i] = row.rhs_const
            if row.s_var is not None:
                self.row_s[i] = s_index[row.s_var]
        self.y_lo = np.array([v.lower for v in self.y_vars])
        self.y_hi = np.array([v.upper for v in self.y_vars])
        self.weight = np.array([m.objective_map.get(v.name, 0.0) for v in self.s_vars])
        self.offset = m.objective_offset
        lowest = np.minimum(self.A * self.y_lo, self.A * self.y_hi).sum(axis=1) if ny else np.zeros(nr)
        self.m_tight = self.b - lowest
        self.s_row = np.full(len(self.s_vars), -1)
        for i, k in enumerate(self.row_s):
            if k >= 0:
                self.s_row[k] = i
        self.integral = bool(np.all(self.weight == np.round(self.weight))) and float(self.offset).is_integer()

    def served(self, y: np.ndarray) -> np.ndarray:
        useful = self.lhs_const + self.pos @ y
        required = self.rhs_const + self.neg @ y
        return useful >= required * (1.0 - SERVED_RTOL)

    def node_lp(self, fix: np.ndarray, params: SolverParams):
        """Solve the relaxation under ``fix``; returns (result, free s indices, constant)."""
        rows_s = self.row_s
        s_fix = np.zeros(len(rows_s), dtype=int)
        has = rows_s >= 0
        s_fix[has] = fix[rows_s[has]]
        keep = ~((rows_s >= 0) & (s_fix == 1))
        free_rows = np.nonzero(keep & (rows_s >= 0) & (s_fix == FREE))[0]
        kept = np.nonzero(keep)[0]
        ny, nf = len(self.y_vars), len(free_rows)
        A = np.zeros((len(kept), ny + nf))
        A[:, :ny] = self.A[kept]
        pos_in_kept = {r: k for k, r in enumerate(kept)}
        for f, r in enumerate(free_rows):
            A[pos_in_kept[r], ny + f] = max(self.m_tight[r], 0.0)
        free_s = rows_s[free_rows]
        c = np.concatenate([np.zeros(ny), self.weight[free_s]])
        lo = np.concatenate([self.y_lo, np.zeros(nf)])
        hi = np.concatenate([self.y_hi, np.ones(nf)])
        start = np.concatenate([np.ones(ny, dtype=bool), np.zeros(nf, dtype=bool)])
        res = sx.simplex(c, A, self.b[kept], lo, hi, start_at_upper=start, feas_tol=params.feas_tol)
        const = self.offset + float(self.weight[fix == 1].sum())
        return res, free_s, const

    def rounded(self, y: np.ndarray):
        """Feasible indicator vector for ``y``: s = 0 exactly where the SINR holds."""
        ok = self.served(y)
        s = np.ones(len(self.s_vars))
        has = self.s_row >= 0
        s[has] = np.where(ok[self.s_row[has]], 0.0, 1.0)
        return s, self.offset + float(self.weight @ s)


def _solve_block(m: ModelInstance, params: SolverParams, deadline: float) -> BlockResult:
    prob = _BlockProblem(m)
    k = len(prob.s_vars)
    eps = 1e-9

    def effective_lb(lb):
        return math.ceil(lb - 1e-6) if prob.integral and math.isfinite(lb) else lb

    def prune(lb, ub):
        return effective_lb(lb) >= ub - eps * max(1.0, abs(ub))

    best_y = prob.y_hi.copy()
    best_s, ub = prob.rounded(best_y)  # current powers are always feasible
    fix0 = np.full(k, FREE)
    # indicators of rows that hold for every y never need to be 1
    for idx in range(k):
        if prob.m_tight[prob.s_row[idx]] <= 0:
            fix0[idx] = 0
    # weights are non-negative, so the offset bounds every node
    heap = [(-math.inf, 0, fix0)] if ub > prob.offset + eps * max(1.0, abs(ub)) else []
    seq, nodes = 1, 0
    lb_floor = math.inf
    reported_lb = -math.inf
    trace = []
    status = OPTIMAL

    while heap:
        global_lb = min(heap[0][0], lb_floor, ub)
        reported_lb = max(reported_lb, effective_lb(global_lb))
        if nodes and gap_percent(ub, reported_lb) <= params.gap_percent:
            status = GAP_REACHED if gap_percent(ub, reported_lb) > 0 else OPTIMAL
            break
        if nodes >= params.node_limit or time.perf_counter() > deadline:
            status = ITERATION_LIMIT
            break
        parent_lb, _, fix = heapq.heappop(heap)
        if prune(parent_lb, ub):
            continue
        res, free_s, const = prob.node_lp(fix, params)
        nodes += 1
        if res.status == sx.INFEASIBLE:
            continue
        if res.status != sx.OPTIMAL:
            lb_floor = min(lb_floor, parent_lb)
            continue
        lb = max(parent_lb, res.objective + const)
        y = res.x[:len(prob.y_vars)]
        s_round, cand = prob.rounded(y)
        if cand < ub:
            ub, best_y, best_s = cand, y.copy(), s_round
        trace.append((reported_lb, ub))
        if prune(lb, ub):
            continue
        s_lp = res.x[len(prob.y_vars):]
        frac = np.minimum(s_lp, 1.0 - s_lp)
        pick = -1
        cands = np.nonzero(frac > params.int_tol)[0]
        if cands.size == 0:
            # integral relaxation whose rounding still disagrees (tolerance edge)
            cands = np.nonzero((s_lp <= params.int_tol) & (s_round[free_s] > 0.5))[0]
            if cands.size == 0:
                if cand > lb + eps * max(1.0, abs(lb)):
                    lb_floor = min(lb_floor, lb)
                continue
            key = [(-prob.weight[free_s[c]], free_s[c]) for c in cands]
        else:
            key = [(-frac[c], -prob.weight[free_s[c]], free_s[c]) for c in cands]
        pick = int(free_s[cands[min(range(len(cands)), key=key.__getitem__)]])
        for value in (0, 1):
            child = fix.copy()
            child[pick] = value
            heapq.heappush(heap, (lb, seq, child))
            seq += 1
    else:
        global_lb = min(lb_floor, ub)
        reported_lb = max(reported_lb, effective_lb(global_lb))
        status = OPTIMAL if gap_percent(ub, reported_lb) == 0 else GAP_REACHED

    values = {v.name: float(val) for v, val in zip(prob.y_vars, best_y)}
    values.update({v.name: float(val) for v, val in zip(prob.s_vars, best_s)})
    reported_lb = min(reported_lb, ub) if math.isfinite(reported_lb) else prob.offset
    return BlockResult(status, values, ub, reported_lb, nodes, trace)


def solve_milp(m: ModelInstance, params: SolverParams = SolverParams(), decompose: bool = True) -> Solution:
    """Branch-and-bound on the whole model or block by block (summing bounds)."""
    t0 = time.perf_counter()
    deadline = t0 + params.time_limit
    blocks = split_blocks(m) if decompose else [m]
    results = map_blocks(_solve_block, blocks, params, deadline)
    values = {}
    for r in results:
        values.update(r.values)
    ub = math.fsum(r.upper for r in results)
    lb = math.fsum(r.lower for r in results)
    status = worst_status(r.status for r in results)
    if status == GAP_REACHED and gap_percent(ub, lb) == 0:
        status = OPTIMAL
    sol = to_solution(m, values, objective=ub, lower_bound=lb, status=status,
                      nodes=sum(r.nodes for r in results), wall_time=time.perf_counter() - t0)
    return sol


def solve_milp_traced(m: ModelInstance, params: SolverParams = SolverParams()):
    """Single-block solve returning the (lower, upper) bound trace as well."""
    res = _solve_block(m, params, time.perf_counter() + params.time_limit)
    return res


def lp_relaxation(m: ModelInstance) -> ModelInstance:
    """The model with binaries relaxed to [0, 1], keeping its own big-M coefficients."""
    variables = tuple(replace(v, kind=CONTINUOUS) if v.kind == BINARY else v for v in m.variables)
    return replace(m, kind=LP, variables=variables)
