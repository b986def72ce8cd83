"""Interchange with external solvers: LP-format models in, solution files in and out.

Solution file format: one ``<variable_name> <value>`` pair per line, any
order, ``#`` starts a comment. Variables left out default to 1 for ``y``
(full power) and 0 for ``s`` (covered). ``# status`` and ``# lower_bound``
comments, as written by :func:`write_solution`, are picked up when present.
"""
from __future__ import annotations

import math
import re
from pathlib import Path

from ..milp import BINARY, CONTINUOUS, LP, MILP, ModelInstance, Row, Variable, s_name, y_name
from ..scenario import id_key
from .solution import OPTIMAL, Solution, SolverParams, _STATUS_RANK


class SolutionError(Exception):
    pass


_TOKEN = re.compile(r"""\s*(?:
    (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<op><=|>=|=<|=>|<|>|=)
  | (?P<sign>[+-])
  | (?P<name>[A-Za-z_][A-Za-z0-9_.\[\]{}!"\#$%&()/,;?@'`|~]*)(?P<colon>:)?
)""", re.X)

_SECTIONS = {
    "minimize": "obj", "minimise": "obj", "minimum": "obj", "min": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "end": "end",
}


def _tokens(text: str):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise SolutionError(f"cannot parse LP text near {text[pos:pos + 20]!r}")
        pos = mt.end()
        kind = mt.lastgroup if mt.lastgroup != "colon" else "name"
        if mt.group("name") is not None:
            out.append(("label" if mt.group("colon") else "name", mt.group("name")))
        elif kind is not None:
            out.append((kind, mt.group(kind)))
    return out


def _linear(tokens):
    """Parse ``[sign] [coef] name ...`` into (coefs, constant)."""
    coefs: dict[str, float] = {}
    const = 0.0
    sign, coef = 1.0, None
    for kind, text in tokens:
        if kind == "sign":
            sign = -sign if text == "-" else sign
        elif kind == "num":
            if coef is not None:
                const += sign * coef
                sign = 1.0
            coef = float(text)
        elif kind == "name":
            coefs[text] = coefs.get(text, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
        else:
            raise SolutionError(f"unexpected token {text!r} in linear expression")
    if coef is not None:
        const += sign * coef
    return coefs, const


def _pair_from_name(name: str):
    if not name.startswith("s_r") or "_a" not in name[3:]:
        return None
    rid, _, aid = name[3:].rpartition("_a")
    return rid, aid


def read_lp_model(path) -> ModelInstance:
    """Read an LP-format file written by :func:`fmpower.milp.export_model` (or compatible)."""
    sections: dict[str, list[str]] = {"obj": [], "rows": [], "bounds": [], "bin": []}
    current = None
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key == "end":
            break
        if key is not None:
            current = key
            continue
        if current is None:
            raise SolutionError(f"{path}: text before the objective section: {line!r}")
        sections[current].append(line)

    obj_tokens = _tokens(" ".join(sections["obj"]))
    if obj_tokens and obj_tokens[0][0] == "label":
        obj_tokens = obj_tokens[1:]
    objective, offset = _linear(obj_tokens)

    row_specs = []
    tokens = _tokens(" ".join(sections["rows"]))
    k = 0
    while k < len(tokens):
        name = f"R{len(row_specs) + 1}"
        if tokens[k][0] == "label":
            name = tokens[k][1]
            k += 1
        start = k
        while k < len(tokens) and tokens[k][0] != "op":
            k += 1
        if k >= len(tokens):
            raise SolutionError(f"{path}: constraint {name} has no sense")
        op = tokens[k][1]
        body = tokens[start:k]
        k += 1
        rhs_sign = 1.0
        if k < len(tokens) and tokens[k][0] == "sign":
            rhs_sign = -1.0 if tokens[k][1] == "-" else 1.0
            k += 1
        if k >= len(tokens) or tokens[k][0] != "num":
            raise SolutionError(f"{path}: constraint {name} has no right-hand side")
        rhs = rhs_sign * float(tokens[k][1])
        k += 1
        coefs, const = _linear(body)
        if op in ("<=", "=<", "<"):
            coefs = {v: -c for v, c in coefs.items()}
            rhs, const = -rhs, -const
        elif op not in (">=", "=>", ">"):
            raise SolutionError(f"{path}: equality constraint {name} is not supported")
        row_specs.append((name, coefs, rhs - const))

    binaries = set()
    for line in sections["bin"]:
        binaries.update(line.split())

    bounds: dict[str, list[float]] = {}
    for line in sections["bounds"]:
        toks = line.replace("<=", " <= ").replace(">=", " >= ").split()
        try:
            if len(toks) == 5 and toks[1] == toks[3] == "<=":
                bounds[toks[2]] = [_bound(toks[0]), _bound(toks[4])]
            elif len(toks) == 3 and toks[1] in (">=", "<="):
                b = bounds.setdefault(toks[0], [0.0, math.inf])
                b[0 if toks[1] == ">=" else 1] = _bound(toks[2])
            elif len(toks) == 2 and toks[1].lower() == "free":
                raise SolutionError(f"{path}: free variable {toks[0]} is not supported")
            else:
                raise ValueError
        except ValueError:
            raise SolutionError(f"{path}: cannot parse bound {line!r}") from None

    names: list[str] = []
    seen = set()
    for name in list(objective) + [v for _, coefs, _ in row_specs for v in coefs] + list(bounds) + sorted(binaries):
        if name not in seen:
            seen.add(name)
            names.append(name)
    variables = []
    for name in names:
        pair = _pair_from_name(name)
        tid = name[3:] if name.startswith("y_t") else None
        if name in binaries:
            variables.append(Variable(name, BINARY, 0.0, 1.0, pair=pair, transmitter_id=tid))
        else:
            lo, hi = bounds.get(name, [0.0, math.inf])
            variables.append(Variable(name, CONTINUOUS, lo, hi, pair=pair, transmitter_id=tid))

    is_s = {v.name for v in variables if v.pair is not None}
    rows = []
    for name, coefs, rhs in row_specs:
        s_terms = [(v, c) for v, c in coefs.items() if v in is_s]
        if len(s_terms) > 1:
            raise SolutionError(f"{path}: row {name} has more than one indicator")
        terms = tuple((v, c) for v, c in coefs.items() if v not in is_s)
        largest = max((abs(c) for _, c in terms), default=1.0)
        s_var, s_coef = s_terms[0] if s_terms else (None, 0.0)
        if s_var is not None and not binaries:
            largest = max(largest, abs(s_coef))
        pair = _pair_from_name("s" + name[1:]) if name.startswith("c_r") else (name, "")
        rows.append(Row(name=name, pair=pair, block=0, terms=terms, lhs_const=0.0, rhs_const=rhs,
                        s_var=s_var, s_coef=s_coef, scale=1.0 / largest if largest else 1.0))
    kind = MILP if binaries else LP
    offsets = ((0, offset),) if offset else ()
    return ModelInstance(kind, tuple(variables), tuple(rows), tuple(objective.items()), offsets)


def _bound(text: str) -> float:
    t = text.lower().lstrip("+")
    if t in ("inf", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(t)


def _num(x: float) -> str:
    return format(float(x), ".17g")


def write_solution(sol: Solution, path, m: ModelInstance | None = None) -> Path:
    """Write ``sol`` in the solution-file format (deterministic ordering)."""
    path = Path(path)
    lines = [f"# objective {_num(sol.objective)}", f"# lower_bound {_num(sol.lower_bound)}",
             f"# status {sol.status}"]
    if sol.radiated_power_w is not None:
        lines.append(f"# radiated_power_w {_num(sol.radiated_power_w)}")
    if m is not None:
        extra_y = sorted(set(sol.y) - {v.transmitter_id for v in m.variables}, key=id_key)
        for v in m.variables:
            if v.transmitter_id is not None and v.transmitter_id in sol.y:
                lines.append(f"{v.name} {_num(sol.y[v.transmitter_id])}")
            elif v.pair is not None and v.pair in sol.s:
                lines.append(f"{v.name} {_num(sol.s[v.pair])}")
        lines.extend(f"{y_name(t)} {_num(sol.y[t])}" for t in extra_y)
    else:
        for t in sorted(sol.y, key=id_key):
            lines.append(f"{y_name(t)} {_num(sol.y[t])}")
        for pair in sorted(sol.s, key=lambda p: (id_key(p[0]), id_key(p[1]))):
            lines.append(f"{s_name(*pair)} {_num(sol.s[pair])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def import_external_solution(path, m: ModelInstance, params: SolverParams = SolverParams(),
                             allow_extra_y: bool = False) -> Solution:
    """Read a solution file, check it against ``m`` and recompute its objective.

    ``allow_extra_y`` accepts ``y`` entries for transmitters outside the model
    (stage-2 files carry them) instead of rejecting them as unknown.
    """
    var = m.var_by_name
    values: dict[str, float] = {}
    extra_y: dict[str, float] = {}
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line, _, comment = raw.partition("#")
        comment = comment.split()
        if len(comment) == 2:
            meta[comment[0]] = comment[1]
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise SolutionError(f"{path}:{lineno}: expected '<name> <value>'")
        name, text = parts
        try:
            value = float(text)
        except ValueError:
            raise SolutionError(f"{path}:{lineno}: bad value {text!r}") from None
        if name not in var:
            if allow_extra_y and name.startswith("y_t"):
                extra_y[name[3:]] = value
                continue
            raise SolutionError(f"{path}:{lineno}: unknown variable {name}")
        values[name] = value

    tol = params.feas_tol
    for v in m.variables:
        if v.name not in values:
            values[v.name] = 1.0 if v.transmitter_id is not None else 0.0
        x = values[v.name]
        if not (v.lower - tol <= x <= v.upper + tol):
            raise SolutionError(f"variable {v.name} = {x} outside [{v.lower}, {v.upper}]")
        if v.kind == BINARY and min(abs(x), abs(x - 1)) > params.int_tol:
            raise SolutionError(f"binary variable {v.name} = {x} is fractional")

    worst, worst_row = 0.0, None
    for r in m.rows:
        s_val = values[r.s_var] if r.s_var is not None else 0.0
        if m.kind == MILP and s_val >= 0.5:
            continue
        lhs = r.activity(values) + (r.s_coef * s_val if m.kind != MILP else 0.0)
        violation = (r.rhs - lhs) * r.scale
        if violation > worst:
            worst, worst_row = violation, r
    if worst > tol:
        raise SolutionError(f"infeasible point: row {worst_row.name} violated by {worst:.3g} (scaled)")

    objective = m.objective_value(values)
    y = {var[n].transmitter_id: x for n, x in values.items() if var[n].transmitter_id is not None}
    y.update(extra_y)
    s = {var[n].pair: x for n, x in values.items() if var[n].pair is not None}
    status = meta.get("status", OPTIMAL)
    if status not in _STATUS_RANK:
        status = OPTIMAL
    try:
        lower = float(meta["lower_bound"])
    except (KeyError, ValueError):
        lower = objective
    radiated = float(meta["radiated_power_w"]) if "radiated_power_w" in meta else None
    return Solution(y=y, s=s, objective=objective, lower_bound=lower, status=status,
                    kind=m.kind, radiated_power_w=radiated)
