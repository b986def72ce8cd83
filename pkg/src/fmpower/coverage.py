"""Best servers, SINR, QoS grading and served-population reports."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Mapping, Optional

from .scenario import ReceivingPoint, Network, Scenario, id_key

FIXED_SERVER = "fixed-server"
FREE_SERVER = "free-server"

# relative slack when testing SINR >= theta; LP vertices land on the boundary
SERVED_RTOL = 1e-9

REPORT_HEADER = ["receiver_id", "network_id", "server_id", "sinr_db", "qos", "served"]


class QoS(IntEnum):
    UNSERVED = 0
    Q1 = 1
    Q2 = 2
    Q3 = 3
    Q4 = 4


QOS_THRESHOLDS_DB = ((QoS.Q4, 0.0), (QoS.Q3, -6.0), (QoS.Q2, -12.0), (QoS.Q1, -15.0))


def qos_level(sinr_db: float) -> QoS:
    for level, threshold in QOS_THRESHOLDS_DB:
        if sinr_db >= threshold:
            return level
    return QoS.UNSERVED


@dataclass(frozen=True)
class ServerAssignment:
    receiver_id: str
    network_id: str
    server_id: str
    useful_power_w: float
    freq_khz: int
    interferer_ids: tuple[str, ...] = ()
    interferer_powers_w: tuple[float, ...] = ()

    @property
    def pair(self) -> tuple[str, str]:
        return self.receiver_id, self.network_id


@dataclass(frozen=True, order=True)
class ProtectedPair:
    receiver_id: str
    network_id: str


def sinr(assignment: ServerAssignment, y: Mapping[str, float], params) -> float:
    """Linear SINR of the assignment's server with power factors ``y`` (missing ids: 1)."""
    interference = math.fsum(p * y.get(j, 1.0) for j, p in
                             zip(assignment.interferer_ids, assignment.interferer_powers_w))
    return assignment.useful_power_w * y.get(assignment.server_id, 1.0) / (interference + params.p_min_w)


def is_served(value: float, theta: float) -> bool:
    return value >= theta * (1.0 - SERVED_RTOL)


def sinr_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else -math.inf


class _ReceiverView:
    """Per-receiver lookups shared by the assignment builders."""

    def __init__(self, s: Scenario, receiver_id: str):
        rp = s.radio_params
        self.received = s.received_at(receiver_id)
        self.interfering: dict[int, list[tuple[str, float]]] = defaultdict(list)
        for link in s.links_by_receiver.get(receiver_id, ()):
            tx = s.tx_by_id[link.transmitter_id]
            pbar = link.a_interf * rp.protection_ratio * tx.power_w
            if pbar >= rp.interference_cutoff_w:
                self.interfering[tx.freq_khz].append((tx.id, pbar))
        for lst in self.interfering.values():
            lst.sort(key=lambda item: id_key(item[0]))

    def assignment(self, receiver_id, tx, link) -> ServerAssignment:
        others = [(j, p) for j, p in self.interfering.get(tx.freq_khz, ()) if j != tx.id]
        return ServerAssignment(
            receiver_id=receiver_id, network_id=tx.network_id, server_id=tx.id,
            useful_power_w=link.a_useful * tx.power_w, freq_khz=tx.freq_khz,
            interferer_ids=tuple(j for j, _ in others),
            interferer_powers_w=tuple(p for _, p in others))


def _pick_best(candidates):
    # max useful power, ties to the smallest transmitter id
    return min(candidates, key=lambda c: (-c[1].a_useful * c[0].power_w, id_key(c[0].id)))


def best_server(s: Scenario, r: ReceivingPoint | str, a: Network | str) -> Optional[ServerAssignment]:
    rid = r if isinstance(r, str) else r.id
    aid = a if isinstance(a, str) else a.id
    view = _ReceiverView(s, rid)
    cands = [(tx, link) for tx, link in view.received if tx.network_id == aid]
    if not cands:
        return None
    tx, link = _pick_best(cands)
    return view.assignment(rid, tx, link)


def _pair_sort_key(pair):
    return id_key(pair[0]), id_key(pair[1])


def all_assignments(s: Scenario) -> dict[tuple[str, str], ServerAssignment]:
    """Best server of every (receiver, network) pair that has one, in (receiver, network) order."""
    out = {}
    for r in sorted(s.receivers, key=lambda r: id_key(r.id)):
        view = _ReceiverView(s, r.id)
        by_net = defaultdict(list)
        for tx, link in view.received:
            by_net[tx.network_id].append((tx, link))
        for aid in sorted(by_net, key=id_key):
            tx, link = _pick_best(by_net[aid])
            out[(r.id, aid)] = view.assignment(r.id, tx, link)
    return out


def candidate_assignments(s: Scenario) -> dict[tuple[str, str], list[ServerAssignment]]:
    """Every received transmitter of each network at each receiver (free-server candidates)."""
    out = {}
    for r in sorted(s.receivers, key=lambda r: id_key(r.id)):
        view = _ReceiverView(s, r.id)
        by_net = defaultdict(list)
        for tx, link in sorted(view.received, key=lambda c: id_key(c[0].id)):
            by_net[tx.network_id].append(view.assignment(r.id, tx, link))
        for aid in sorted(by_net, key=id_key):
            out[(r.id, aid)] = by_net[aid]
    return out


def current_service_set(s: Scenario, assignments=None) -> frozenset[ProtectedPair]:
    """Pairs whose best server meets the SINR threshold at current powers."""
    if assignments is None:
        assignments = all_assignments(s)
    theta = s.radio_params.theta
    return frozenset(ProtectedPair(*pair) for pair, asg in assignments.items()
                     if is_served(sinr(asg, {}, s.radio_params), theta))


@dataclass(frozen=True)
class PairCoverage:
    receiver_id: str
    network_id: str
    server_id: str
    sinr_db: float
    qos: QoS
    served: bool
    population: int


@dataclass(frozen=True)
class CoverageReport:
    mode: str
    pairs: tuple[PairCoverage, ...]
    served_by_network: dict[str, int] = field(default_factory=dict)
    potential_by_network: dict[str, int] = field(default_factory=dict)
    served_by_admin: dict[str, int] = field(default_factory=dict)
    potential_by_admin: dict[str, int] = field(default_factory=dict)

    @property
    def total_served(self) -> int:
        return sum(self.served_by_admin.values())

    def served_pairs(self) -> set[tuple[str, str]]:
        return {(p.receiver_id, p.network_id) for p in self.pairs if p.served}

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_HEADER)
            for p in self.pairs:
                w.writerow([p.receiver_id, p.network_id, p.server_id, f"{p.sinr_db:.6f}",
                            p.qos.name, int(p.served)])
        return path


def coverage_report(s: Scenario, y: Optional[Mapping[str, float]] = None, mode: str = FIXED_SERVER,
                    theta: Optional[float] = None, assignments=None, candidates=None) -> CoverageReport:
    """Served population under power factors ``y``.

    ``fixed-server`` keeps each pair's current best server; ``free-server``
    takes the best SINR over every received transmitter of the network.
    """
    y = y or {}
    rp = s.radio_params
    theta = rp.theta if theta is None else theta
    if mode == FIXED_SERVER:
        groups = {pair: [asg] for pair, asg in (assignments or all_assignments(s)).items()}
    elif mode == FREE_SERVER:
        groups = candidates or candidate_assignments(s)
    else:
        raise ValueError(f"unknown coverage mode {mode!r}")

    rx = s.receiver_by_id
    rows = []
    served_net, pot_net = defaultdict(int), defaultdict(int)
    served_adm, pot_adm = defaultdict(int), defaultdict(int)
    for pair in sorted(groups, key=_pair_sort_key):
        best_val, best = -1.0, None
        for asg in groups[pair]:
            v = sinr(asg, y, rp)
            if v > best_val:
                best_val, best = v, asg
        receiver = rx[pair[0]]
        ok = is_served(best_val, theta)
        db = sinr_db(best_val)
        rows.append(PairCoverage(pair[0], pair[1], best.server_id, db, qos_level(db), ok,
                                 receiver.population))
        pot_net[pair[1]] += receiver.population
        pot_adm[receiver.admin] += receiver.population
        if ok:
            served_net[pair[1]] += receiver.population
            served_adm[receiver.admin] += receiver.population
    for n in s.networks:
        served_net.setdefault(n.id, 0)
        pot_net.setdefault(n.id, 0)
    for r in s.receivers:
        served_adm.setdefault(r.admin, 0)
        pot_adm.setdefault(r.admin, 0)
    return CoverageReport(mode, tuple(rows), dict(served_net), dict(pot_net),
                          dict(served_adm), dict(pot_adm))


def write_protected_csv(pairs, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["receiver_id", "network_id"])
        for p in sorted(pairs, key=lambda p: _pair_sort_key((p.receiver_id, p.network_id))):
            w.writerow([p.receiver_id, p.network_id])
    return path
