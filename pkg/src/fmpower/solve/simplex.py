"""Bounded-variable primal simplex on dense arrays.

Solves ``min c.x  s.t.  A x >= b,  lower <= x <= upper`` with finite lower
bounds. Internally each row gets a surplus ``w >= 0`` (column ``-e_i``) and,
when the starting point violates it, an artificial (column ``+e_i``)
driven out in phase 1. Pricing is Dantzig's rule, switching to Bland's rule
once the iteration count passes ``bland_after`` so degenerate cycling
cannot persist.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

PIVOT_TOL = 1e-9
REFACTOR_EVERY = 64


@dataclass
class LPResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int


def simplex(c, A, b, lower, upper, *, start_at_upper=None, feas_tol: float = 1e-7,
            opt_tol: float = 1e-9, max_iter: Optional[int] = None,
            bland_after: Optional[int] = None) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape if A.ndim == 2 else (0, len(c))
    A = A.reshape(m, n)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(~np.isfinite(lower)):
        raise ValueError("simplex needs finite lower bounds")
    if np.any(upper < lower):
        return LPResult(INFEASIBLE, lower.copy(), np.inf, 0)
    if max_iter is None:
        max_iter = max(2000, 50 * (m + n))
    if bland_after is None:
        bland_after = 10 * (m + n)

    x0 = lower.copy()
    if start_at_upper is not None:
        up = np.asarray(start_at_upper, dtype=bool) & np.isfinite(upper)
        x0[up] = upper[up]
    if m == 0:
        # bounds only: each variable sits at its cheaper bound
        x = np.where(c < 0, upper, lower)
        if np.any(~np.isfinite(x)):
            return LPResult(UNBOUNDED, x0, -np.inf, 0)
        return LPResult(OPTIMAL, x, float(c @ x), 0)

    return _Simplex(c, A, b, lower, upper, x0, feas_tol, opt_tol, max_iter, bland_after).run()


class _Simplex:
    def __init__(self, c, A, b, lower, upper, x0, feas_tol, opt_tol, max_iter, bland_after):
        m, n = A.shape
        self.m, self.n = m, n
        self.A, self.b = A, b
        self.c = c
        self.feas_tol, self.opt_tol = feas_tol, opt_tol
        self.max_iter, self.bland_after = max_iter, bland_after
        N = n + 2 * m
        # variable layout: [structural | surplus | artificial]
        self.lo = np.concatenate([lower, np.zeros(2 * m)])
        self.hi = np.concatenate([upper, np.full(m, np.inf), np.zeros(m)])
        self.x = np.concatenate([x0, np.zeros(2 * m)])
        self.at_upper = np.zeros(N, dtype=bool)
        self.at_upper[:n] = (x0 == upper) & (upper > lower)
        self.is_basic = np.zeros(N, dtype=bool)
        self.basis = np.empty(m, dtype=int)
        self.iterations = 0
        self._crash()

    # -- columns -----------------------------------------------------------
    def column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.A[:, j]
        col = np.zeros(self.m)
        col[(j - self.n) % self.m] = -1.0 if j < self.n + self.m else 1.0
        return col

    def _crash(self):
        """Diagonal starting basis: surplus, singleton structural, or artificial."""
        m, n, A = self.m, self.n, self.A
        resid = self.b - A @ self.x[:n]
        nnz = np.count_nonzero(A, axis=0)
        singleton_in = {}
        for j in np.nonzero(nnz == 1)[0]:
            i = int(np.nonzero(A[:, j])[0][0])
            if A[i, j] > 0 and not self.at_upper[j]:
                singleton_in.setdefault(i, []).append(int(j))
        self.artificials = []
        for i in range(m):
            if resid[i] <= 0:
                self._make_basic(i, n + i, -resid[i])
                continue
            placed = False
            for j in singleton_in.get(i, ()):
                step = resid[i] / A[i, j]
                if not self.is_basic[j] and self.x[j] + step <= self.hi[j]:
                    self._make_basic(i, j, self.x[j] + step)
                    placed = True
                    break
            if not placed:
                k = n + m + i
                self.hi[k] = np.inf
                self.artificials.append(k)
                self._make_basic(i, k, resid[i])
        self.refactor()

    def _make_basic(self, row: int, j: int, value: float):
        self.basis[row] = j
        self.is_basic[j] = True
        self.at_upper[j] = False
        self.x[j] = value

    def refactor(self):
        B = np.column_stack([self.column(j) for j in self.basis])
        self.Binv = np.linalg.inv(B)
        nonbasic = ~self.is_basic
        xs = np.where(nonbasic, self.x, 0.0)
        rhs = self.b - self.A @ xs[:self.n] + xs[self.n:self.n + self.m] - xs[self.n + self.m:]
        self.x[self.basis] = self.Binv @ rhs

    # -- iterations --------------------------------------------------------
    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        n, m = self.n, self.m
        pi = cost[self.basis] @ self.Binv
        d = np.empty_like(cost)
        d[:n] = cost[:n] - pi @ self.A
        d[n:n + m] = cost[n:n + m] + pi
        d[n + m:] = cost[n + m:] - pi
        d[self.is_basic] = 0.0
        return d

    def choose_entering(self, d: np.ndarray, bland: bool) -> int:
        movable = ~self.is_basic & (self.hi > self.lo)
        gain = np.where(self.at_upper, d, -d)
        eligible = movable & (gain > self.opt_tol)
        idx = np.nonzero(eligible)[0]
        if idx.size == 0:
            return -1
        if bland:
            return int(idx[0])
        return int(idx[np.argmax(gain[idx])])

    def step(self, cost: np.ndarray, bland: bool) -> Optional[str]:
        """One pivot. Returns a terminal status or ``None`` to continue."""
        d = self.reduced_costs(cost)
        q = self.choose_entering(d, bland)
        if q < 0:
            return OPTIMAL
        direction = -1.0 if self.at_upper[q] else 1.0
        alpha = self.Binv @ self.column(q)
        rate = -direction * alpha  # d x_B / d t
        xb = self.x[self.basis]
        lo_b, hi_b = self.lo[self.basis], self.hi[self.basis]

        ratios = np.full(self.m, np.inf)
        dec = rate < -PIVOT_TOL
        inc = (rate > PIVOT_TOL) & np.isfinite(hi_b)
        ratios[dec] = (xb[dec] - lo_b[dec]) / -rate[dec]
        ratios[inc] = (hi_b[inc] - xb[inc]) / rate[inc]
        np.maximum(ratios, 0.0, out=ratios)
        t_flip = self.hi[q] - self.lo[q]
        t_row = ratios.min()
        if not np.isfinite(t_row) and not np.isfinite(t_flip):
            return UNBOUNDED

        if t_flip <= t_row:
            self.x[q] += direction * t_flip
            self.x[self.basis] = xb + t_flip * rate
            self.at_upper[q] = not self.at_upper[q]
            return None

        ties = np.nonzero(ratios <= t_row + 1e-12)[0]
        if bland:
            r = int(ties[np.argmin(self.basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(alpha[ties]))])
        t = ratios[r]
        self.x[q] += direction * t
        self.x[self.basis] = xb + t * rate
        leaving = self.basis[r]
        hits_upper = rate[r] > 0
        self.x[leaving] = self.hi[leaving] if hits_upper else self.lo[leaving]
        self.at_upper[leaving] = hits_upper
        self.is_basic[leaving] = False
        self.basis[r] = q
        self.is_basic[q] = True
        self.at_upper[q] = False

        piv = self.Binv[r] / alpha[r]
        self.Binv -= np.outer(alpha, piv)
        self.Binv[r] = piv
        self.iterations += 1
        if self.iterations % REFACTOR_EVERY == 0:
            self.refactor()
        return None

    def optimise(self, cost: np.ndarray) -> str:
        scale = np.abs(cost).max()
        if scale > 0:
            cost = cost / scale
        while True:
            if self.iterations >= self.max_iter:
                return ITERATION_LIMIT
            status = self.step(cost, bland=self.iterations >= self.bland_after)
            if status is not None:
                self.refactor()
                return status

    def run(self) -> LPResult:
        n, m = self.n, self.m
        if self.artificials:
            cost = np.zeros(n + 2 * m)
            cost[self.artificials] = 1.0
            status = self.optimise(cost)
            if status == ITERATION_LIMIT:
                return self._result(ITERATION_LIMIT)
            infeas = self.x[self.artificials].sum()
            if infeas > self.feas_tol * max(1.0, len(self.artificials) ** 0.5):
                return self._result(INFEASIBLE)
        self.hi[n + m:] = 0.0
        self.at_upper[n + m:] = False
        cost = np.concatenate([self.c, np.zeros(2 * m)])
        if np.any(self.c):
            status = self.optimise(cost)
        else:
            status = OPTIMAL
        return self._result(status)

    def _result(self, status: str) -> LPResult:
        x = self.x[:self.n].copy()
        # basic values drift by rounding only; pin them into their box
        x = np.minimum(np.maximum(x, self.lo[:self.n]), self.hi[:self.n])
        obj = float(self.c @ x) if status == OPTIMAL else (np.inf if status == INFEASIBLE else float(self.c @ x))
        return LPResult(status, x, obj, self.iterations)
