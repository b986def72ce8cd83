"""Before/after metrics of a power-reduction solution and the energy estimate."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .coverage import (FIXED_SERVER, FREE_SERVER, CoverageReport, all_assignments,
                       candidate_assignments, coverage_report)
from .scenario import Scenario, id_key

HOURS_PER_YEAR = 8760
DEFAULT_EFFICIENCY = 0.5

SUMMARY_HEADER = ["metric", "value"]
NETWORK_HEADER = ["rank", "network_id", "admin", "name", "channels_mhz", "population_now",
                  "population_after", "delta_population", "delta_population_free_server"]
ENERGY_HEADER = ["configuration", "radiated_w", "efficiency", "consumed_w", "annual_gwh"]


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyReport:
    radiated_w: float
    efficiency: float
    consumed_w: float
    annual_wh: float

    @property
    def annual_gwh(self) -> float:
        return self.annual_wh / 1e9


def energy_estimate(total_radiated_w: float, efficiency: float = DEFAULT_EFFICIENCY) -> EnergyReport:
    """Consumed power at the meter and its yearly energy, running around the clock."""
    if not (0.0 < efficiency <= 1.0):
        raise EvaluationError(f"efficiency must be in (0, 1], got {efficiency}")
    if total_radiated_w < 0:
        raise EvaluationError("radiated power must be non-negative")
    consumed = total_radiated_w / efficiency
    return EnergyReport(total_radiated_w, efficiency, consumed, consumed * HOURS_PER_YEAR)


@dataclass(frozen=True)
class NetworkRow:
    network_id: str
    admin: str
    name: str
    channels_mhz: tuple[float, ...]
    population_now: int
    population_after: int
    population_now_free: int
    population_after_free: int

    @property
    def delta(self) -> int:
        return self.population_after - self.population_now

    @property
    def delta_free(self) -> int:
        return self.population_after_free - self.population_now_free


@dataclass(frozen=True)
class Evaluation:
    """Comparison of the current configuration with power factors ``y``.

    ``served`` maps ``(mode, stage)`` with stage ``"before"`` or ``"after"``
    to served population per receiver administration.
    """

    power_before_w: float
    power_after_w: float
    shutdown_ids: tuple[str, ...]
    optimizable_count: int
    domestic_admins: tuple[str, ...]
    served: dict
    potential: dict
    networks: tuple[NetworkRow, ...]
    energy_before: EnergyReport
    energy_after: EnergyReport

    @property
    def delta_power_percent(self) -> float:
        if self.power_before_w == 0:
            return 0.0
        return 100.0 * (self.power_after_w - self.power_before_w) / self.power_before_w

    @property
    def shutdown_count(self) -> int:
        return len(self.shutdown_ids)

    def served_population(self, mode: str, stage: str, domestic: bool) -> int:
        return sum(v for admin, v in self.served[(mode, stage)].items()
                   if (admin in self.domestic_admins) == domestic)

    def delta_served(self, mode: str = FIXED_SERVER, domestic: bool = True) -> int:
        return (self.served_population(mode, "after", domestic)
                - self.served_population(mode, "before", domestic))

    def potential_population(self, domestic: bool) -> int:
        return sum(v for admin, v in self.potential.items() if (admin in self.domestic_admins) == domestic)


def _check_y(s: Scenario, y: Mapping[str, float]) -> dict[str, float]:
    txs = s.tx_by_id
    for tid, v in y.items():
        if tid not in txs:
            raise EvaluationError(f"solution refers to unknown transmitter {tid}")
        if not (-1e-9 <= v <= 1.0 + 1e-9) or math.isnan(v):
            raise EvaluationError(f"transmitter {tid}: power factor {v} outside [0, 1]")
        if not txs[tid].optimizable and abs(v - 1.0) > 1e-12:
            raise EvaluationError(f"transmitter {tid} is not optimisable but has factor {v}")
    return {tid: min(max(v, 0.0), 1.0) for tid, v in y.items()}


def shutdown_transmitters(s: Scenario, y: Mapping[str, float]) -> tuple[str, ...]:
    """Optimisable transmitters with no receiving point at useful power >= p_min."""
    p_min = s.radio_params.p_min_w
    by_tx = s.links_by_transmitter
    out = []
    for t in sorted(s.transmitters, key=lambda t: id_key(t.id)):
        if not t.optimizable:
            continue
        power = t.power_w * y.get(t.id, 1.0)
        if not any(link.a_useful * power >= p_min for link in by_tx.get(t.id, ())):
            out.append(t.id)
    return tuple(out)


def _total_power(s: Scenario, y: Mapping[str, float]) -> float:
    return math.fsum(t.power_w * y.get(t.id, 1.0) for t in s.transmitters if t.optimizable)


def evaluate_solution(s: Scenario, sol, theta: Optional[float] = None,
                      domestic_admins: Optional[Iterable[str]] = None,
                      efficiency: float = DEFAULT_EFFICIENCY) -> Evaluation:
    """Compare ``sol``'s power factors against the current configuration.

    ``sol`` is a :class:`~fmpower.solve.Solution` or a plain mapping of
    transmitter id to factor. Domestic administrations default to those
    owning optimisable transmitters.
    """
    y = _check_y(s, sol.y if hasattr(sol, "y") else sol)
    if domestic_admins is None:
        domestic_admins = {t.admin for t in s.transmitters if t.optimizable}
    domestic = tuple(sorted(domestic_admins))

    assignments = all_assignments(s)
    candidates = candidate_assignments(s)
    reports: dict[tuple[str, str], CoverageReport] = {}
    for mode in (FIXED_SERVER, FREE_SERVER):
        for stage, factors in (("before", {}), ("after", y)):
            reports[(mode, stage)] = coverage_report(s, factors, mode, theta, assignments, candidates)

    freqs = defaultdict(set)
    for t in s.transmitters:
        freqs[t.network_id].add(t.freq_khz / 1000.0)
    rows = []
    for n in s.networks:
        rows.append(NetworkRow(
            n.id, n.admin, n.name, tuple(sorted(freqs[n.id])),
            reports[(FIXED_SERVER, "before")].served_by_network[n.id],
            reports[(FIXED_SERVER, "after")].served_by_network[n.id],
            reports[(FREE_SERVER, "before")].served_by_network[n.id],
            reports[(FREE_SERVER, "after")].served_by_network[n.id]))
    rows.sort(key=lambda r: (-r.population_now, id_key(r.network_id)))

    before, after = _total_power(s, {}), _total_power(s, y)
    return Evaluation(
        power_before_w=before, power_after_w=after,
        shutdown_ids=shutdown_transmitters(s, y),
        optimizable_count=sum(1 for t in s.transmitters if t.optimizable),
        domestic_admins=domestic,
        served={k: dict(r.served_by_admin) for k, r in reports.items()},
        potential=dict(reports[(FIXED_SERVER, "before")].potential_by_admin),
        networks=tuple(rows),
        energy_before=energy_estimate(before, efficiency),
        energy_after=energy_estimate(after, efficiency))


def network_table(e: Evaluation, top_n: int, domestic: Optional[bool] = None,
                  mode: str = FIXED_SERVER) -> list[NetworkRow]:
    """The ``top_n`` networks with the largest population gain (ties by network id)."""
    if top_n < 1:
        raise EvaluationError("top_n must be at least 1")
    rows = [r for r in e.networks if domestic is None or (r.admin in e.domestic_admins) == domestic]
    gain = (lambda r: r.delta) if mode == FIXED_SERVER else (lambda r: r.delta_free)
    rows.sort(key=lambda r: (-gain(r), id_key(r.network_id)))
    return rows[:top_n]


def _write(path: Path, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _fmt(x: float) -> str:
    return format(x, ".6f")


def summary_rows(e: Evaluation) -> list[tuple[str, str]]:
    rows = [
        ("optimizable_transmitters", str(e.optimizable_count)),
        ("plants_shut_down", str(e.shutdown_count)),
        ("power_before_w", _fmt(e.power_before_w)),
        ("power_after_w", _fmt(e.power_after_w)),
        ("delta_power_percent", _fmt(e.delta_power_percent)),
    ]
    for mode in (FIXED_SERVER, FREE_SERVER):
        tag = mode.replace("-", "_")
        for domestic, where in ((True, "domestic"), (False, "abroad")):
            rows.append((f"served_before_{where}_{tag}", str(e.served_population(mode, "before", domestic))))
            rows.append((f"served_after_{where}_{tag}", str(e.served_population(mode, "after", domestic))))
            rows.append((f"delta_served_{where}_{tag}", f"{e.delta_served(mode, domestic):+d}"))
    return rows


def write_evaluation(e: Evaluation, out_dir, top_n: int = 20) -> list[Path]:
    """summary.csv, networks_domestic.csv, networks_foreign.csv and energy.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [_write(out / "summary.csv", SUMMARY_HEADER, summary_rows(e))]
    for domestic, name in ((True, "networks_domestic.csv"), (False, "networks_foreign.csv")):
        rows = []
        if any((r.admin in e.domestic_admins) == domestic for r in e.networks):
            for k, r in enumerate(network_table(e, top_n, domestic), 1):
                rows.append([k, r.network_id, r.admin, r.name,
                             ";".join(f"{f:.1f}" for f in r.channels_mhz),
                             r.population_now, r.population_after, f"{r.delta:+d}", f"{r.delta_free:+d}"])
        paths.append(_write(out / name, NETWORK_HEADER, rows))
    energy = [[label, _fmt(rep.radiated_w), f"{rep.efficiency:g}", _fmt(rep.consumed_w),
               _fmt(rep.annual_gwh)] for label, rep in (("current", e.energy_before),
                                                      ("optimized", e.energy_after))]
    paths.append(_write(out / "energy.csv", ENERGY_HEADER, energy))
    return paths


def current_scenario_rows(s: Scenario, domestic_admins: Optional[Iterable[str]] = None,
                          theta: Optional[float] = None) -> list[tuple[str, str]]:
    """Headline figures of the current configuration (transmitters, servers, populations)."""
    if domestic_admins is None:
        domestic_admins = {t.admin for t in s.transmitters if t.optimizable}
    domestic_admins = set(domestic_admins)
    assignments = all_assignments(s)
    servers = {a.server_id for a in assignments.values()}
    txs = s.tx_by_id
    report = coverage_report(s, {}, FIXED_SERVER, theta, assignments)
    dom_servers = sum(1 for t in servers if txs[t].admin in domestic_admins)

    def split(d):
        dom = sum(v for k, v in d.items() if k in domestic_admins)
        return dom, sum(d.values()) - dom

    pot = split(report.potential_by_admin)
    served = split(report.served_by_admin)
    return [
        ("total_transmitters", str(len(s.transmitters))),
        ("servers", str(len(servers))),
        ("servers_domestic", str(dom_servers)),
        ("servers_foreign", str(len(servers) - dom_servers)),
        ("population_domestic", str(pot[0])),
        ("population_abroad", str(pot[1])),
        ("served_population_domestic", str(served[0])),
        ("served_population_abroad", str(served[1])),
    ]


def write_current(s: Scenario, path, domestic_admins=None, theta=None) -> Path:
    return _write(Path(path), SUMMARY_HEADER, current_scenario_rows(s, domestic_admins, theta))
