import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fmpower.coverage import QoS, qos_level
from fmpower.maprender import (DEFAULT_COLORS, WHITE, ColorTable, GridSpec, MapError, interference_field_db,
                               read_ppm, render_interference_map, render_service_map, write_pixels_csv, write_ppm)
from fmpower.scenario import generate_synthetic

from builders import link, radio, rx, scenario, tx

BLUE, LIGHT_BLUE, GREEN, YELLOW, RED = (0, 0, 255), (80, 160, 255), (0, 200, 0), (255, 220, 0), (255, 0, 0)
GRID = GridSpec(12.0, 42.0, 12.3, 42.1, 0.1)  # 3 x 1 pixels


def jammed_point(sinr_db_target):
    """One receiver in the west pixel whose only server sits at the given SINR."""
    interference = 100.0 / 10 ** (sinr_db_target / 10) - 1.0
    txs = [tx(1, 1, power=100.0), tx(2, 2, power=1e5, admin="FOR", optimizable=False)]
    links = [link(1, 1, 1.0), link(1, 2, 1e-9, interference / 1e5)]
    return scenario(txs, [rx(1, lon=12.05, lat=42.05)], links, radio(p_min=1.0, theta=0.01, p_max=1e6))


def field_point(field_db, offset=60.0):
    """One domestic receiver hit by one foreign transmitter at the given field strength."""
    watts = 10 ** ((field_db - offset - 30.0) / 10)
    txs = [tx(1, 1, power=100.0, admin="FOR", optimizable=False)]
    return scenario(txs, [rx(1, lon=12.15, lat=42.05)], [link(1, 1, 1e-9, watts / 100.0)],
                    radio(p_min=1.0, field_offset_db=offset))


def test_default_colours():
    c = DEFAULT_COLORS
    assert [c.qos[q] for q in (QoS.Q4, QoS.Q3, QoS.Q2, QoS.Q1, QoS.UNSERVED)] == [BLUE, LIGHT_BLUE, GREEN, YELLOW, RED]
    assert c.field_thresholds_db == (70, 50, 40, 30, 20)
    assert c.field_colors == ((255, 0, 0), (150, 75, 0), (200, 150, 100), (255, 140, 0), (255, 220, 0))
    assert c.negligible_color == GREEN


def test_colour_table_invariants():
    with pytest.raises(MapError):
        ColorTable(field_thresholds_db=(20, 30), field_colors=(RED, GREEN))
    with pytest.raises(MapError):
        ColorTable(field_thresholds_db=(30, 20), field_colors=(RED,))


def test_grid_geometry():
    assert (GRID.width, GRID.height) == (3, 1)
    assert GRID.pixel_of(12.0, 42.1) == (0, 0)
    assert GRID.pixel_of(12.3, 42.0) == (2, 0)
    assert GRID.pixel_of(12.31, 42.0) is None
    with pytest.raises(MapError):
        GridSpec(0, 0, 1, 1, 0)
    with pytest.raises(MapError):
        GridSpec(0, 0, 0, 1, 0.1)


def test_covering_grid_holds_every_receiver():
    s = generate_synthetic(1)
    g = GridSpec.covering(s, 0.05)
    assert all(g.pixel_of(r.lon, r.lat) is not None for r in s.receivers)


@pytest.mark.parametrize("target, colour", [(-1.36, LIGHT_BLUE), (-14.15, YELLOW), (-20.0, RED), (3.0, BLUE)])
def test_service_pixel_colour(target, colour):
    r = render_service_map(jammed_point(target), {}, GRID)
    assert r.value_db[0, 0] == pytest.approx(target, abs=1e-9)
    assert tuple(r.rgb[0, 0]) == colour
    assert tuple(r.rgb[0, 1]) == WHITE and tuple(r.rgb[0, 2]) == WHITE
    assert math.isnan(r.value_db[0, 1]) and r.band[0][1] == ""


@pytest.mark.parametrize("field, colour, label", [(72.0, (255, 0, 0), ">=70"), (19.9, GREEN, "<20"),
                                                   (20.0, (255, 220, 0), ">=20"), (45.0, (200, 150, 100), ">=40")])
def test_interference_pixel_colour(field, colour, label):
    s = field_point(field)
    assert interference_field_db(s, "1", {}, "FOR") == pytest.approx(field, abs=1e-9)
    r = render_interference_map(s, {}, "FOR", GRID)
    assert tuple(r.rgb[0, 1]) == colour and r.band[0][1] == label
    assert tuple(r.rgb[0, 0]) == WHITE


def test_no_interferers_is_green():
    s = field_point(72.0)
    r = render_interference_map(s, {}, "XYZ", GRID, affected_admins=["DOM"])
    assert r.value_db[0, 1] == -math.inf and tuple(r.rgb[0, 1]) == GREEN


def test_empty_grid_rejected():
    far = GridSpec(0.0, 0.0, 1.0, 1.0, 0.5)
    with pytest.raises(MapError):
        render_service_map(jammed_point(0.0), {}, far)
    with pytest.raises(MapError):
        render_interference_map(field_point(30.0), {}, "FOR", far)


@given(st.floats(-60, 60), st.floats(-60, 60))
def test_qos_banding_is_monotone(a, b):
    lo, hi = sorted((a, b))
    assert qos_level(hi) >= qos_level(lo)


@given(st.floats(-20, 120), st.floats(-20, 120))
def test_field_banding_is_monotone(a, b):
    lo, hi = sorted((a, b))
    # lower band index = stronger interference
    assert DEFAULT_COLORS.field_band(hi) <= DEFAULT_COLORS.field_band(lo)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100), st.floats(0, 1))
def test_lowering_foreign_interferers_never_darkens(seed, factor):
    s = generate_synthetic(seed)
    g = GridSpec.covering(s, 0.1)
    before = render_service_map(s, {}, g, admin="DOM")
    y = {t.id: factor for t in s.transmitters if t.admin != "DOM"}
    after = render_service_map(s, y, g, admin="DOM")
    filled = ~np.isnan(before.value_db)
    assert np.all(after.value_db[filled] >= before.value_db[filled] - 1e-9)


def test_rendering_is_deterministic(tmp_path):
    s = generate_synthetic(2)
    g = GridSpec.covering(s, 0.05)
    a = write_ppm(render_interference_map(s, {}, "DOM", g), tmp_path / "a.ppm").read_bytes()
    b = write_ppm(render_interference_map(s, {}, "DOM", g), tmp_path / "b.ppm").read_bytes()
    assert a == b
    assert render_service_map(s, {}, g) == render_service_map(s, {}, g)


def test_ppm_format_and_round_trip(tmp_path):
    r = render_service_map(jammed_point(-1.36), {}, GRID)
    path = write_ppm(r, tmp_path / "m.ppm")
    data = path.read_bytes()
    assert data.startswith(b"P6\n3 1\n255\n") and len(data) == len(b"P6\n3 1\n255\n") + 9
    assert np.array_equal(read_ppm(path), r.rgb)


def test_pixels_csv(tmp_path):
    r = render_service_map(jammed_point(-1.36), {}, GRID)
    lines = write_pixels_csv(r, tmp_path / "m.csv").read_text().splitlines()
    assert lines == ["pixel_x,pixel_y,value_db,band", "0,0,-1.3600,Q3"]
