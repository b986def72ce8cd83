"""MILP / LP power-reduction models and their LP-format export.

One row per (receiver, network) pair that has a best server::

    y_server - theta * sum_j (pbar_rj / p_server) * y_j + M * s_ra >= theta * p_min / p_server

Transmitters that may not be optimised (foreign plants) keep ``y = 1`` and
are folded into the right-hand side. Pairs in the protected set get no
``s`` column. Coefficients are kept unscaled here; ``Row.scale`` is the
factor the solver applies so that the largest coefficient is 1.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

from .coverage import SERVED_RTOL, ProtectedPair, all_assignments
from .scenario import Scenario, id_key

MILP = "milp"
LP = "lp"
CONTINUOUS = "continuous"
BINARY = "binary"
DEFAULT_BIG_M = 1e40
PER_ROW = "per_row"


class ModelError(Exception):
    pass


def y_name(transmitter_id: str) -> str:
    return f"y_t{transmitter_id}"


def s_name(receiver_id: str, network_id: str) -> str:
    return f"s_r{receiver_id}_a{network_id}"


def row_name(receiver_id: str, network_id: str) -> str:
    return f"c_r{receiver_id}_a{network_id}"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: float
    upper: float
    block: int = 0
    transmitter_id: Optional[str] = None
    pair: Optional[tuple[str, str]] = None


@dataclass(frozen=True)
class Row:
    """One SINR row in ``>=`` form.

    ``lhs_const`` is 1 when the server is not optimisable (its ``y`` is
    fixed to 1); ``rhs_const`` holds the noise term plus fixed interferers.
    """

    name: str
    pair: tuple[str, str]
    block: int
    terms: tuple[tuple[str, float], ...]
    lhs_const: float
    rhs_const: float
    s_var: Optional[str] = None
    s_coef: float = 0.0
    scale: float = 1.0
    theta: float = 1.0
    noise_ratio: float = 0.0
    interference_ratio: float = 0.0

    @property
    def rhs(self) -> float:
        return self.rhs_const - self.lhs_const

    @property
    def coefs(self) -> tuple[tuple[str, float], ...]:
        if self.s_var is None:
            return self.terms
        return self.terms + ((self.s_var, self.s_coef),)

    def activity(self, values) -> float:
        """Left-hand side without the ``s`` column; ``values`` maps variable names."""
        return math.fsum(c * values[v] for v, c in self.terms)

    def holds(self, values, rtol: float = SERVED_RTOL) -> bool:
        """The SINR condition of this row with ``s = 0``, in ratio form."""
        useful = self.lhs_const + math.fsum(c * values[v] for v, c in self.terms if c > 0)
        required = self.rhs_const - math.fsum(c * values[v] for v, c in self.terms if c < 0)
        return useful >= required * (1.0 - rtol)


@dataclass(frozen=True)
class ModelInstance:
    kind: str
    variables: tuple[Variable, ...]
    rows: tuple[Row, ...]
    objective: tuple[tuple[str, float], ...]
    offsets: tuple[tuple[int, float], ...] = ()
    theta: float = 1.0
    bigm: str = ""

    @cached_property
    def var_by_name(self) -> dict[str, Variable]:
        return {v.name: v for v in self.variables}

    @cached_property
    def objective_map(self) -> dict[str, float]:
        return dict(self.objective)

    @property
    def objective_offset(self) -> float:
        return math.fsum(v for _, v in self.offsets)

    @property
    def blocks(self) -> list[int]:
        ids = {v.block for v in self.variables} | {r.block for r in self.rows} | {b for b, _ in self.offsets}
        return sorted(ids)

    @property
    def binaries(self) -> list[Variable]:
        return [v for v in self.variables if v.kind == BINARY]

    def objective_value(self, values) -> float:
        return math.fsum(c * values.get(v, 0.0) for v, c in self.objective) + self.objective_offset


def _parse_bigm(policy) -> Optional[float]:
    """``None`` for the per-row rule, else the fixed constant."""
    if policy is None or policy == PER_ROW:
        return None
    if isinstance(policy, (int, float)):
        return float(policy)
    text = str(policy)
    if text.startswith("fixed"):
        _, _, value = text.partition(":")
        return float(value) if value else DEFAULT_BIG_M
    raise ModelError(f"unknown big-M policy {policy!r}; use 'fixed[:M]' or 'per_row'")


def compute_bigm(row: Row) -> float:
    """Smallest constant that deactivates the row for every ``y`` in [0,1]^n."""
    return row.theta * (row.noise_ratio + row.interference_ratio)


def _build(s: Scenario, protected: Iterable, kind: str, fixed_m: Optional[float]) -> ModelInstance:
    rp = s.radio_params
    theta = rp.theta
    assignments = all_assignments(s)
    protected = {(p.receiver_id, p.network_id) if isinstance(p, ProtectedPair) else tuple(p)
                 for p in protected}
    missing = protected - set(assignments)
    if missing:
        pair = sorted(missing)[0]
        raise ModelError(f"protected pair (r={pair[0]}, a={pair[1]}) has no best server")

    txs = s.tx_by_id
    receivers = s.receiver_by_id
    rows: list[Row] = []
    objective: list[tuple[str, float]] = []
    offsets: dict[int, float] = defaultdict(float)
    used_y: set[str] = set()
    s_vars: list[Variable] = []

    for pair, asg in assignments.items():
        p = asg.useful_power_w
        server = txs[asg.server_id]
        terms: dict[str, float] = {}
        lhs_const = 0.0
        rhs_const = theta * rp.p_min_w / p
        if server.optimizable:
            terms[y_name(server.id)] = 1.0
        else:
            lhs_const = 1.0
        ratio_sum = 0.0
        for j, pbar in zip(asg.interferer_ids, asg.interferer_powers_w):
            ratio = pbar / p
            ratio_sum += ratio
            if txs[j].optimizable:
                name = y_name(j)
                terms[name] = terms.get(name, 0.0) - theta * ratio
            else:
                rhs_const += theta * ratio
        in_z = pair in protected
        population = receivers[pair[0]].population
        if not terms:
            # nothing to optimise: protected rows hold, the rest stay uncovered
            if not in_z:
                offsets[asg.freq_khz] += population
            continue
        row = Row(
            name=row_name(*pair), pair=pair, block=asg.freq_khz,
            terms=tuple(terms.items()), lhs_const=lhs_const, rhs_const=rhs_const,
            theta=theta, noise_ratio=rp.p_min_w / p, interference_ratio=ratio_sum)
        if not in_z:
            sv = s_name(*pair)
            if kind == LP:
                coef = 1.0
            elif fixed_m is None:
                coef = compute_bigm(row)
            else:
                coef = fixed_m
            row = replace(row, s_var=sv, s_coef=coef)
            s_vars.append(Variable(sv, BINARY if kind == MILP else CONTINUOUS, 0.0,
                                   1.0 if kind == MILP else math.inf, asg.freq_khz, pair=pair))
            objective.append((sv, float(population)))
        largest = max(abs(c) for _, c in row.terms)
        if kind == LP:
            largest = max(largest, abs(row.s_coef))
        rows.append(replace(row, scale=1.0 / largest))
        used_y.update(terms)

    if not rows and not offsets:
        raise ModelError("empty model: no (receiver, network) pair has a best server")
    y_vars = [Variable(y_name(t.id), CONTINUOUS, 0.0, 1.0, t.freq_khz, transmitter_id=t.id)
              for t in sorted(s.transmitters, key=lambda t: id_key(t.id)) if y_name(t.id) in used_y]
    bigm = "lp" if kind == LP else (PER_ROW if fixed_m is None else f"fixed:{fixed_m:.17g}")
    return ModelInstance(kind, tuple(y_vars + s_vars), tuple(rows), tuple(objective),
                         tuple(sorted(offsets.items())), theta, bigm)


def build_milp(s: Scenario, protected, bigm_policy="fixed") -> ModelInstance:
    """Mixed-integer model with binary non-coverage indicators."""
    return _build(s, protected, MILP, _parse_bigm(bigm_policy))


def build_lp(s: Scenario, protected) -> ModelInstance:
    """Same rows with continuous ``s >= 0`` carrying coefficient 1."""
    return _build(s, protected, LP, None)


def split_blocks(m: ModelInstance) -> list[ModelInstance]:
    """One sub-model per frequency channel."""
    var_block = {v.name: v.block for v in m.variables}
    out = []
    for b in m.blocks:
        rows = tuple(r for r in m.rows if r.block == b)
        for r in rows:
            for name, _ in r.coefs:
                if var_block[name] != b:
                    raise ModelError(f"row {r.name} spans blocks {b} and {var_block[name]}")
        out.append(ModelInstance(
            m.kind, tuple(v for v in m.variables if v.block == b), rows,
            tuple((v, c) for v, c in m.objective if var_block[v] == b),
            tuple((bb, off) for bb, off in m.offsets if bb == b), m.theta, m.bigm))
    return out


# ---------------------------------------------------------------------------
# LP-format export

TERMS_PER_LINE = 6


def _num(x: float) -> str:
    return format(x, ".17g")


def _linear(terms, constant: float = 0.0) -> list[str]:
    pieces = []
    for k, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = _num(abs(coef))
        if k == 0:
            pieces.append(f"{'-' if coef < 0 else ''}{mag} {name}")
        else:
            pieces.append(f"{sign} {mag} {name}")
    if constant or not pieces:
        pieces.append(_num(constant) if not pieces else f"{'-' if constant < 0 else '+'} {_num(abs(constant))}")
    lines = []
    for k in range(0, len(pieces), TERMS_PER_LINE):
        lines.append(" ".join(pieces[k:k + TERMS_PER_LINE]))
    return lines


def export_model(m: ModelInstance, path) -> Path:
    """Write ``m`` in CPLEX LP text format (17 significant digits)."""
    path = Path(path)
    out = [f"\\ fmpower {m.kind} model, big-M {m.bigm or 'n/a'}, theta {_num(m.theta)}", "Minimize"]
    obj = _linear(m.objective, m.objective_offset)
    out.append(f" obj: {obj[0]}")
    out.extend(f"   {line}" for line in obj[1:])
    out.append("Subject To")
    for r in m.rows:
        body = _linear(r.coefs)
        body[-1] = f"{body[-1]} >= {_num(r.rhs)}"
        out.append(f" {r.name}: {body[0]}")
        out.extend(f"   {line}" for line in body[1:])
    out.append("Bounds")
    for v in m.variables:
        if v.kind == BINARY:
            continue
        if math.isinf(v.upper):
            out.append(f" {v.name} >= {_num(v.lower)}")
        else:
            out.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
    binaries = [v.name for v in m.variables if v.kind == BINARY]
    if binaries:
        out.append("Binaries")
        out.extend(f" {name}" for name in binaries)
    out.append("End")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
