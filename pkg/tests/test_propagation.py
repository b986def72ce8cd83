import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fmpower.propagation import (PathLossModel, combine_powers_db, db_from_linear, fading_from_distance,
                                 fading_matrix, great_circle_km, linear_from_db, path_fading,
                                 received_interfering_power, received_useful_power)
from fmpower.scenario import ReceptionLink

from builders import rx, tx


def test_db_conversions():
    assert db_from_linear(1.0) == 0.0
    assert db_from_linear(2.0) == pytest.approx(3.0103, abs=1e-4)
    assert linear_from_db(db_from_linear(0.37)) == pytest.approx(0.37, abs=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_db_rejects_non_positive(bad):
    with pytest.raises(ValueError):
        db_from_linear(bad)


@given(st.floats(min_value=1e-30, max_value=1e30))
def test_db_round_trip(x):
    assert linear_from_db(db_from_linear(x)) == pytest.approx(x, rel=1e-12)


def test_combine_powers_examples():
    assert combine_powers_db([86.07]) == pytest.approx(86.07, abs=1e-12)
    assert combine_powers_db([80, 80]) == pytest.approx(83.0103, abs=1e-3)
    expected = 10 * math.log10(10 ** 8.607 + 10 ** 7.307)
    assert combine_powers_db([86.07, 73.07]) == pytest.approx(expected, abs=1e-9)
    assert combine_powers_db([86.07, 73.07]) == pytest.approx(86.28, abs=0.01)
    with pytest.raises(ValueError):
        combine_powers_db([])


@given(st.lists(st.floats(min_value=-150, max_value=150), min_size=1, max_size=8),
       st.floats(min_value=0.01, max_value=20))
def test_combine_dominates_and_is_monotone(values, bump):
    total = combine_powers_db(values)
    assert total >= max(values) - 1e-12
    raised = list(values)
    raised[0] += bump
    assert combine_powers_db(raised) >= total - 1e-12


def test_combine_matches_watt_sum():
    watts = [1e-3, 2.5e-4, 7e-6]
    dbs = [db_from_linear(w) for w in watts]
    assert linear_from_db(combine_powers_db(dbs)) == pytest.approx(sum(watts), rel=1e-12)


@pytest.mark.parametrize("a, p, y, expected", [(1.0, 100.0, 1.0, 100.0), (0.5, 100.0, 0.5, 25.0), (0.0, 70.0, 0.3, 0.0)])
def test_received_useful_power(a, p, y, expected):
    assert received_useful_power(ReceptionLink("r", "t", a, a), p, y) == pytest.approx(expected)


@pytest.mark.parametrize("a, pr, p, y, expected", [(1.0, 1.0, 100.0, 1.0, 100.0), (0.2, 2.0, 50.0, 1.0, 20.0),
                                                   (0.7, 3.0, 50.0, 0.0, 0.0)])
def test_received_interfering_power(a, pr, p, y, expected):
    assert received_interfering_power(ReceptionLink("r", "t", a, a), p, y, pr) == pytest.approx(expected)


@given(st.floats(0, 1), st.floats(1, 100), st.floats(0.1, 1e4), st.floats(0, 1), st.floats(1, 10))
def test_interfering_dominates_useful(a, margin, p, y, pr):
    link = ReceptionLink("r", "t", a, min(1.0, a * margin))
    assert received_interfering_power(link, p, y, pr) >= received_useful_power(link, p, y) - 1e-12


def test_fading_from_distance_examples():
    m = PathLossModel(reference_loss=1e-3, exponent=3.0, cutoff_km=50.0)
    assert fading_from_distance(1.0, m)[0] == pytest.approx(1e-3)
    assert fading_from_distance(2.0, m)[0] == pytest.approx(1.25e-4, abs=1e-9)
    assert fading_from_distance(50.01, m) == (0.0, 0.0)


def test_fading_clamps_colocated_points_to_one():
    m = PathLossModel(reference_loss=1e-3, exponent=3.0)
    a_u, a_i = fading_from_distance(0.0, m)
    assert a_u == 1.0 and a_i == 1.0


def test_interference_margin_applies_and_caps():
    m = PathLossModel(reference_loss=1e-3, exponent=3.0, interference_margin=4.0)
    a_u, a_i = fading_from_distance(2.0, m)
    assert a_i == pytest.approx(4 * a_u)


@given(st.floats(0, 200), st.floats(0, 200))
def test_fading_monotone_in_distance(d1, d2):
    m = PathLossModel()
    near, far = sorted((d1, d2))
    assert fading_from_distance(near, m)[0] >= fading_from_distance(far, m)[0]


def test_path_fading_uses_great_circle_distance():
    m = PathLossModel(reference_loss=1e-3, exponent=3.5, cutoff_km=500)
    t, r = tx(1, 1, lon=12.0, lat=42.0), rx(1, lon=12.5, lat=42.3)
    d = great_circle_km(12.0, 42.0, 12.5, 42.3)
    assert path_fading(t, r, m) == pytest.approx((1e-3 / d ** 3.5, 1e-3 / d ** 3.5))


def test_great_circle_one_degree_of_latitude():
    assert great_circle_km(0, 0, 0, 1) == pytest.approx(6371.0 * math.pi / 180)


def test_fading_matrix_matches_scalar_version():
    rng = np.random.default_rng(3)
    txs = np.column_stack([rng.uniform(12, 13, 4), rng.uniform(41, 42, 4)])
    rxs = np.column_stack([rng.uniform(12, 13, 6), rng.uniform(41, 42, 6)])
    m = PathLossModel(interference_margin=2.0, cutoff_km=60)
    au, ai = fading_matrix(txs, rxs, m)
    for i, (rlon, rlat) in enumerate(rxs):
        for j, (tlon, tlat) in enumerate(txs):
            exp = fading_from_distance(great_circle_km(tlon, tlat, rlon, rlat), m)
            assert au[i, j] == pytest.approx(exp[0], rel=1e-12)
            assert ai[i, j] == pytest.approx(exp[1], rel=1e-12)


def test_path_model_problems():
    assert PathLossModel().problems() == []
    assert PathLossModel(exponent=1.5).problems()
    assert PathLossModel(interference_margin=0.5).problems()
    assert PathLossModel(reference_loss=2.0).problems()
