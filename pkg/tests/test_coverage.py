import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from fmpower.coverage import (FIXED_SERVER, FREE_SERVER, ProtectedPair, QoS, ServerAssignment, all_assignments,
                              best_server, coverage_report, current_service_set, qos_level, sinr, sinr_db)
from fmpower.propagation import combine_powers_db
from fmpower.scenario import generate_synthetic

from builders import TINY, capodistria_like, link, radio, rx, scenario, two_pair_conflict, tx


def _assignment(useful_db, interference_dbs, p_min=1.0):
    return ServerAssignment("r", "a", "t", 10 ** (useful_db / 10), 98000,
                            tuple(f"j{k}" for k in range(len(interference_dbs))),
                            tuple(10 ** (v / 10) for v in interference_dbs))


@pytest.mark.parametrize("useful, combined, expected, level", [
    (71.94, 73.30, -1.36, QoS.Q3),
    (71.93, 86.08, -14.15, QoS.Q1),
])
def test_capodistria_sinr_anchors(useful, combined, expected, level):
    params = radio(p_min=1.0)
    # interference is what remains of the combined figure once the noise floor is removed
    interf_db = 10 * math.log10(10 ** (combined / 10) - params.p_min_w)
    value = sinr_db(sinr(_assignment(useful, [interf_db]), {}, params))
    assert value == pytest.approx(expected, abs=0.01)
    assert qos_level(value) is level


def test_combined_interference_of_capodistria_after():
    assert combine_powers_db([86.07, 73.07]) == pytest.approx(86.28, abs=0.01)


@pytest.mark.parametrize("value, level", [
    (0.0, QoS.Q4), (-0.01, QoS.Q3), (-6.0, QoS.Q3), (-12.0, QoS.Q2), (-15.0, QoS.Q1), (-15.01, QoS.UNSERVED),
    (-1.36, QoS.Q3), (-14.15, QoS.Q1), (-math.inf, QoS.UNSERVED),
])
def test_qos_boundaries(value, level):
    assert qos_level(value) is level


def test_single_transmitter_private_frequency():
    s = scenario([tx(1, 1)], [rx(1)], [link(1, 1, 0.5)])
    a = best_server(s, "1", "1")
    assert a.server_id == "1" and a.interferer_ids == ()
    assert a.useful_power_w == 50.0


def test_stronger_transmitter_wins_and_weaker_interferes():
    s = scenario([tx(1, 1, power=10), tx(2, 1, power=5)], [rx(1)], [link(1, 1, 1.0), link(1, 2, 1.0)])
    a = best_server(s, "1", "1")
    assert a.server_id == "1" and a.interferer_ids == ("2",)


def test_tie_goes_to_smallest_id():
    s = scenario([tx(7, 1), tx(3, 1)], [rx(1)], [link(1, 7, 1.0), link(1, 3, 1.0)])
    assert best_server(s, "1", "1").server_id == "3"


def test_no_received_transmitter_gives_none():
    s = scenario([tx(1, 1, power=0.5)], [rx(1)], [link(1, 1, 1.0)])
    assert best_server(s, "1", "1") is None
    assert all_assignments(s) == {}


def test_interference_cutoff_and_other_frequencies():
    s = scenario([tx(1, 1), tx(2, 2, freq=98100), tx(3, 2), tx(4, 3)], [rx(1)],
                 [link(1, 1, 1.0), link(1, 2, 1.0), link(1, 3, 1e-3), link(1, 4, 1e-5)])
    # t3: 0.1 W interfering, above cutoff 0.01; t4: 1e-3 W below it
    assert best_server(s, "1", "1").interferer_ids == ("3",)


def test_exact_threshold_is_protected():
    params = radio(p_min=2.0, theta=3.0)
    s = scenario([tx(1, 1, power=6.0)], [rx(1)], [link(1, 1, 1.0)], params)
    assert sinr(best_server(s, "1", "1"), {}, params) == 3.0
    assert current_service_set(s) == {ProtectedPair("1", "1")}


def test_mutual_jamming_leaves_z_empty():
    assert current_service_set(two_pair_conflict()) == frozenset()


def test_fixed_server_at_full_power_is_z():
    s = generate_synthetic(3)
    z = {(p.receiver_id, p.network_id) for p in current_service_set(s)}
    assert coverage_report(s, {}, FIXED_SERVER).served_pairs() == z


def _jammed_fixture():
    # net1 = t1, t2; net2 = t3, t4; r1 hears t1 jammed by t3
    params = radio(p_min=1.0, theta=1.0)
    txs = [tx(1, 1), tx(2, 1, freq=99000), tx(3, 2), tx(4, 2, freq=99500)]
    rxs = [rx(1, 400), rx(2, 50)]
    links = [link(1, 1, 1.0), link(1, 3, 0.01, 1.5), link(2, 4, 1.0), link(2, 2, 0.5)]
    return scenario(txs, rxs, links, params)


def test_halving_the_jammer_serves_the_receiver():
    s = _jammed_fixture()
    before = coverage_report(s, {}, FIXED_SERVER)
    after = coverage_report(s, {"3": 0.5}, FIXED_SERVER)
    assert after.served_by_network["1"] - before.served_by_network["1"] == 400
    assert after.total_served - before.total_served == 400


def test_capodistria_like_fixture():
    s = capodistria_like()
    assert current_service_set(s) == {ProtectedPair("1", "2"), ProtectedPair("2", "2")}
    rep = coverage_report(s, {"2": 0.5})
    assert rep.served_pairs() == {("1", "1"), ("1", "2"), ("2", "2")}


def test_free_server_picks_an_alternative():
    # t1 is the best server but jammed by t3; t2 of the same network is clean
    params = radio(p_min=1.0, theta=1.0)
    s = scenario([tx(1, 1), tx(2, 1, freq=99000), tx(3, 2)], [rx(1)],
                 [link(1, 1, 1.0), link(1, 2, 0.5), link(1, 3, 1.0)], params)
    assert coverage_report(s, {}, FIXED_SERVER).total_served == 0
    free = coverage_report(s, {}, FREE_SERVER)
    assert free.total_served == 100
    assert [p.server_id for p in free.pairs if p.network_id == "1"] == ["2"]


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        coverage_report(capodistria_like(), {}, "best")


y_vectors = st.lists(st.floats(0, 1), min_size=6, max_size=6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 500), y_vectors)
def test_report_invariants(seed, ys):
    s = generate_synthetic(seed, TINY)
    y = {t.id: v for t, v in zip(s.transmitters, ys)}
    fixed = coverage_report(s, y, FIXED_SERVER)
    free = coverage_report(s, y, FREE_SERVER)
    assert free.total_served >= fixed.total_served
    for rep in (fixed, free):
        assert sum(rep.served_by_network.values()) == rep.total_served
        assert sum(p.population for p in rep.pairs if p.served) == rep.total_served
        for k, v in rep.served_by_admin.items():
            assert v <= rep.potential_by_admin[k]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 500), y_vectors, st.integers(0, 5), st.floats(0, 1))
def test_lowering_an_interferer_never_hurts(seed, ys, k, factor):
    s = generate_synthetic(seed, TINY)
    y = {t.id: v for t, v in zip(s.transmitters, ys)}
    for asg in all_assignments(s).values():
        if not asg.interferer_ids:
            continue
        j = asg.interferer_ids[k % len(asg.interferer_ids)]
        lowered = dict(y, **{j: y[j] * factor})
        assert sinr(asg, lowered, s.radio_params) >= sinr(asg, y, s.radio_params)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_sinr_scale_invariant(useful, interf, p_min, c):
    a = ServerAssignment("r", "a", "t", useful, 1, ("j",), (interf,))
    b = ServerAssignment("r", "a", "t", useful * c, 1, ("j",), (interf * c,))
    assert sinr(b, {}, radio(p_min=p_min * c)) == pytest.approx(sinr(a, {}, radio(p_min=p_min)), rel=1e-9)


def test_z_pairs_meet_threshold_literally():
    s = generate_synthetic(5)
    asg = all_assignments(s)
    for p in current_service_set(s, asg):
        assert sinr(asg[(p.receiver_id, p.network_id)], {}, s.radio_params) >= s.radio_params.theta


def test_report_is_permutation_invariant():
    s = generate_synthetic(2)
    rng = random.Random(0)
    shuffled = type(s)(s.radio_params, s.networks, tuple(rng.sample(s.transmitters, len(s.transmitters))),
                       tuple(rng.sample(s.receivers, len(s.receivers))), tuple(rng.sample(s.links, len(s.links))))
    a, b = coverage_report(s, {"1": 0.3}), coverage_report(shuffled, {"1": 0.3})
    assert a.served_by_admin == b.served_by_admin and a.pairs == b.pairs


def test_write_csv(tmp_path):
    rep = coverage_report(capodistria_like())
    lines = rep.write_csv(tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "receiver_id,network_id,server_id,sinr_db,qos,served"
    assert len(lines) == 1 + len(rep.pairs)
