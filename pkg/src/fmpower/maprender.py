"""Raster QoS and interference maps over a regular lon/lat grid, written as PPM (P6)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .coverage import QoS, candidate_assignments, qos_level, sinr, sinr_db
from .propagation import combine_powers_db, db_from_linear
from .scenario import Scenario

WHITE = (255, 255, 255)


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Pixels of ``pixel_deg`` degrees from the north-west corner of the box.

    A receiver belongs to the pixel containing its coordinates; points on
    the east or south edge fall into the last column or row.
    """

    lon_min: float
    lat_min: float
    lon_max: float
    lat_max: float
    pixel_deg: float

    def __post_init__(self):
        if not self.pixel_deg > 0:
            raise MapError("pixel size must be positive")
        if not (self.lon_max > self.lon_min and self.lat_max > self.lat_min):
            raise MapError("degenerate grid box")

    @property
    def width(self) -> int:
        return max(1, math.ceil((self.lon_max - self.lon_min) / self.pixel_deg - 1e-9))

    @property
    def height(self) -> int:
        return max(1, math.ceil((self.lat_max - self.lat_min) / self.pixel_deg - 1e-9))

    def pixel_of(self, lon: float, lat: float) -> Optional[tuple[int, int]]:
        """``(x, y)`` pixel of a point, or ``None`` outside the box."""
        if not (self.lon_min <= lon <= self.lon_max and self.lat_min <= lat <= self.lat_max):
            return None
        x = min(int((lon - self.lon_min) / self.pixel_deg), self.width - 1)
        y = min(int((self.lat_max - lat) / self.pixel_deg), self.height - 1)
        return x, y

    @classmethod
    def covering(cls, s: Scenario, pixel_deg: float) -> "GridSpec":
        """Smallest grid around every receiver, padded by half a pixel."""
        if not s.receivers:
            raise MapError("scenario has no receivers")
        lons = [r.lon for r in s.receivers]
        lats = [r.lat for r in s.receivers]
        pad = pixel_deg / 2
        return cls(min(lons) - pad, min(lats) - pad, max(lons) + pad, max(lats) + pad, pixel_deg)


@dataclass(frozen=True)
class ColorTable:
    qos: dict = field(default_factory=lambda: {
        QoS.Q4: (0, 0, 255),
        QoS.Q3: (80, 160, 255),
        QoS.Q2: (0, 200, 0),
        QoS.Q1: (255, 220, 0),
        QoS.UNSERVED: (255, 0, 0),
    })
    field_thresholds_db: tuple[float, ...] = (70.0, 50.0, 40.0, 30.0, 20.0)
    field_colors: tuple[tuple[int, int, int], ...] = (
        (255, 0, 0), (150, 75, 0), (200, 150, 100), (255, 140, 0), (255, 220, 0))
    negligible_color: tuple[int, int, int] = (0, 200, 0)

    def __post_init__(self):
        t = self.field_thresholds_db
        if any(a <= b for a, b in zip(t, t[1:])):
            raise MapError("interference thresholds must be strictly decreasing")
        if len(self.field_colors) != len(t):
            raise MapError("one colour per interference band is required")

    def field_band(self, field_db: float) -> int:
        """Index into ``field_thresholds_db``, or ``len(...)`` for the negligible band."""
        for k, threshold in enumerate(self.field_thresholds_db):
            if field_db >= threshold:
                return k
        return len(self.field_thresholds_db)

    def field_color(self, band: int) -> tuple[int, int, int]:
        return self.negligible_color if band == len(self.field_colors) else self.field_colors[band]

    def field_label(self, band: int) -> str:
        t = self.field_thresholds_db
        return f"<{t[-1]:g}" if band == len(t) else f">={t[band]:g}"


DEFAULT_COLORS = ColorTable()


@dataclass(frozen=True)
class Raster:
    """Rendered map: RGB pixels, the per-pixel value in dB and band labels."""

    grid: GridSpec
    rgb: np.ndarray  # (height, width, 3) uint8
    value_db: np.ndarray  # (height, width) float, NaN where empty
    band: tuple[tuple[str, ...], ...]  # "" where empty

    def __eq__(self, other):
        return (isinstance(other, Raster) and self.grid == other.grid and self.band == other.band
                and np.array_equal(self.rgb, other.rgb)
                and np.array_equal(self.value_db, other.value_db, equal_nan=True))


def _bin_receivers(s: Scenario, g: GridSpec, receiver_ids: Optional[set] = None):
    cells: dict[tuple[int, int], list[str]] = {}
    for r in s.receivers:
        if receiver_ids is not None and r.id not in receiver_ids:
            continue
        px = g.pixel_of(r.lon, r.lat)
        if px is not None:
            cells.setdefault(px, []).append(r.id)
    if not cells:
        raise MapError("no receiving point falls inside the grid")
    return cells


def _raster(g: GridSpec, values: dict, color_of, label_of) -> Raster:
    rgb = np.empty((g.height, g.width, 3), dtype=np.uint8)
    rgb[:] = WHITE
    val = np.full((g.height, g.width), np.nan)
    labels = [[""] * g.width for _ in range(g.height)]
    for (x, y), v in values.items():
        rgb[y, x] = color_of(v)
        val[y, x] = v
        labels[y][x] = label_of(v)
    return Raster(g, rgb, val, tuple(tuple(row) for row in labels))


def _select(s: Scenario, networks: Optional[Iterable[str]], admin: Optional[str]):
    nets = {n.id for n in s.networks}
    if networks is not None:
        nets &= set(networks)
    if admin is not None:
        nets &= {n.id for n in s.networks if n.admin == admin}
    receivers = None if admin is None else {r.id for r in s.receivers if r.admin == admin}
    return nets, receivers


def render_service_map(s: Scenario, y: Mapping[str, float], g: GridSpec,
                       networks: Optional[Iterable[str]] = None, admin: Optional[str] = None,
                       colors: ColorTable = DEFAULT_COLORS, candidates=None) -> Raster:
    """Best free-server SINR per pixel, coloured by QoS level.

    ``admin`` restricts both the networks and the receiving points to that
    administration (the affected-administration view); ``networks`` narrows
    the networks further. Pixels holding receivers with no filtered network
    received show as unserved.
    """
    nets, receivers = _select(s, networks, admin)
    cells = _bin_receivers(s, g, receivers)
    groups = candidates if candidates is not None else candidate_assignments(s)
    by_receiver: dict[str, list] = {}
    for (rid, aid), cands in groups.items():
        if aid in nets:
            by_receiver.setdefault(rid, []).extend(cands)
    rp = s.radio_params
    values = {}
    for px, rids in cells.items():
        best = -math.inf
        for rid in rids:
            for asg in by_receiver.get(rid, ()):
                best = max(best, sinr_db(sinr(asg, y, rp)))
        values[px] = best
    return _raster(g, values, lambda v: colors.qos[qos_level(v)], lambda v: qos_level(v).name)


def interference_field_db(s: Scenario, receiver_id: str, y: Mapping[str, float], admin: str) -> float:
    """Cumulative interfering field at a receiver from ``admin``'s transmitters, dB(uV/m).

    Interfering powers (fading x protection ratio x power x factor) are
    summed in watts, converted to dBm and shifted by the scenario's
    power-to-field offset. ``-inf`` when nothing of ``admin`` is received.
    """
    rp = s.radio_params
    powers = []
    for link in s.links_by_receiver.get(receiver_id, ()):
        tx = s.tx_by_id[link.transmitter_id]
        if tx.admin != admin:
            continue
        p = link.a_interf * rp.protection_ratio * tx.power_w * y.get(tx.id, 1.0)
        if p > 0:
            powers.append(db_from_linear(p) + 30.0)
    if not powers:
        return -math.inf
    return combine_powers_db(powers) + rp.field_offset_db


def render_interference_map(s: Scenario, y: Mapping[str, float], interfering_admin: str, g: GridSpec,
                            affected_admins: Optional[Iterable[str]] = None,
                            colors: ColorTable = DEFAULT_COLORS) -> Raster:
    """Maximum cumulative interfering field per pixel, banded by field strength.

    Only receiving points of ``affected_admins`` are drawn (default: every
    administration other than the interfering one).
    """
    if affected_admins is None:
        affected_admins = {r.admin for r in s.receivers} - {interfering_admin}
    affected = set(affected_admins)
    receivers = {r.id for r in s.receivers if r.admin in affected}
    cells = _bin_receivers(s, g, receivers)
    values = {px: max(interference_field_db(s, rid, y, interfering_admin) for rid in rids)
              for px, rids in cells.items()}
    return _raster(g, values, lambda v: colors.field_color(colors.field_band(v)),
                   lambda v: colors.field_label(colors.field_band(v)))


def write_ppm(raster: Raster, path) -> Path:
    path = Path(path)
    h, w, _ = raster.rgb.shape
    path.write_bytes(b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(raster.rgb).tobytes())
    return path


def read_ppm(path) -> np.ndarray:
    """Pixels of a P6 file written by :func:`write_ppm`, shape (height, width, 3)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or parts[2] != b"255":
        raise MapError(f"{path}: not an 8-bit P6 file")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def write_pixels_csv(raster: Raster, path) -> Path:
    """Companion table of non-empty pixels: pixel_x,pixel_y,value_db,band."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pixel_x", "pixel_y", "value_db", "band"])
        for y, row in enumerate(raster.band):
            for x, label in enumerate(row):
                if label:
                    v = raster.value_db[y, x]
                    w.writerow([x, y, "-inf" if math.isinf(v) else f"{v:.4f}", label])
    return path
