"""Second pass: keep the coverage decisions, minimise radiated power."""
from __future__ import annotations

import math
import time
from dataclasses import replace

from ..milp import BINARY, CONTINUOUS, LP, MILP, ModelInstance, y_name
from ..scenario import Scenario
from .lp import solve_lp
from .solution import OPTIMAL, Solution, SolverError, SolverParams


def radiated_power(s: Scenario, y) -> float:
    """Total power of optimisable transmitters under factors ``y`` (missing ids: 1)."""
    return math.fsum(t.power_w * y.get(t.id, 1.0) for t in s.transmitters if t.optimizable)


def stage2_model(s: Scenario, m: ModelInstance, sol: Solution) -> ModelInstance:
    """LP over ``y`` with every indicator pinned to its value in ``sol``."""
    svals = {r.s_var: sol.s.get(r.pair, 0.0) for r in m.rows if r.s_var is not None}
    rows = []
    for r in m.rows:
        if r.s_var is None:
            rows.append(r)
        elif m.kind == MILP:
            if svals[r.s_var] < 0.5:
                rows.append(replace(r, s_var=None, s_coef=0.0))
        else:
            rows.append(r)
    variables = []
    for v in m.variables:
        if v.kind == BINARY:
            continue
        if v.pair is not None:
            val = svals.get(v.name, 0.0)
            v = replace(v, kind=CONTINUOUS, lower=val, upper=val)
        variables.append(v)
    power = {y_name(t.id): t.power_w for t in s.transmitters}
    objective = tuple((v.name, power[v.name]) for v in variables if v.transmitter_id is not None)
    return replace(m, kind=LP, variables=tuple(variables), rows=tuple(rows), objective=objective, offsets=())


def power_minimization_stage(s: Scenario, m: ModelInstance, sol: Solution,
                             params: SolverParams = SolverParams()) -> Solution:
    t0 = time.perf_counter()
    res = solve_lp(stage2_model(s, m, sol), params)
    if res.status != OPTIMAL:
        raise SolverError(f"power minimisation failed: {res.status}")
    # transmitters outside every row serve and disturb nobody: switch them off
    y = {t.id: 0.0 for t in s.transmitters if t.optimizable}
    y.update(res.y)
    return Solution(y=y, s=dict(sol.s), objective=sol.objective, lower_bound=sol.lower_bound,
                    status=sol.status, nodes=sol.nodes, wall_time=time.perf_counter() - t0,
                    kind=m.kind, radiated_power_w=radiated_power(s, y), iterations=res.iterations)
