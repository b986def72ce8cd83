"""Small hand-built scenarios shared by the tests."""
from __future__ import annotations

from fmpower.scenario import Network, SyntheticParams, RadioParams, ReceivingPoint, ReceptionLink, Scenario, Transmitter

FREQ = 98000
# 1-12 binaries per model for most seeds; small enough for the exhaustive oracle
TINY = SyntheticParams(n_networks=3, n_transmitters=6, n_receivers=10, n_channels=2, box=(12, 41, 12.5, 41.5))


def radio(p_min=1.0, theta=1.0, pr=1.0, p_max=1e6, **kw) -> RadioParams:
    return RadioParams(p_min_w=p_min, theta=theta, protection_ratio=pr, p_max_w=p_max, **kw)


def tx(tid, net, power=100.0, freq=FREQ, admin="DOM", optimizable=True, lon=12.0, lat=42.0):
    return Transmitter(str(tid), str(net), admin, freq, power, lon, lat, optimizable)


def rx(rid, population=100, admin="DOM", lon=12.0, lat=42.0):
    return ReceivingPoint(str(rid), admin, lon, lat, population)


def link(rid, tid, a_useful, a_interf=None):
    return ReceptionLink(str(rid), str(tid), a_useful, a_useful if a_interf is None else a_interf)


def scenario(transmitters, receivers, links, params=None, networks=None) -> Scenario:
    if networks is None:
        seen = {}
        for t in transmitters:
            seen.setdefault(t.network_id, t.admin)
        networks = [Network(nid, admin, f"net{nid}") for nid, admin in seen.items()]
    return Scenario(params or radio(), tuple(networks), tuple(transmitters), tuple(receivers), tuple(links))


def two_pair_conflict(p_big=10, p_small=7) -> Scenario:
    """Two receivers whose coverage conditions cannot hold together.

    Receiver 1 hears transmitter 1 (network 1) jammed by transmitter 2;
    receiver 2 hears transmitter 2 (network 2) jammed by transmitter 1.
    Jammers sit below the reception floor, so each receiver has one pair.
    With theta = 4, covering r1 needs y1 >= 4 y2 + 0.04 and covering r2
    needs y2 >= 4 y1 + 0.04, so at most one of them can be covered.
    At full power neither is served, so both pairs are free.
    """
    params = radio(p_min=1.0, theta=4.0)
    txs = [tx(1, 1), tx(2, 2)]
    rxs = [rx(1, p_big), rx(2, p_small)]
    links = [link(1, 1, 1.0), link(1, 2, 0.001, 1.0), link(2, 2, 1.0), link(2, 1, 0.001, 1.0)]
    return scenario(txs, rxs, links, params)


def capodistria_like() -> Scenario:
    """A foreign server jammed by one optimisable domestic transmitter."""
    params = radio(p_min=1.0, theta=0.5)
    txs = [tx(1, 1, power=1000.0, admin="FOR", optimizable=False), tx(2, 2, power=1000.0)]
    rxs = [rx(1, 1000, admin="FOR"), rx(2, 500)]
    links = [link(1, 1, 0.01), link(1, 2, 0.03), link(2, 2, 0.1)]
    return scenario(txs, rxs, links, params)
