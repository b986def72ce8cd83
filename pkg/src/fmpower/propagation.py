"""Received power arithmetic and the synthetic path-loss model.

All powers are linear watts. dB values only appear at the edges (reports,
maps) and are never summed directly: use :func:`combine_powers_db`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EARTH_RADIUS_KM = 6371.0
MIN_DISTANCE_KM = 0.001


def db_from_linear(x: float) -> float:
    if not x > 0:
        raise ValueError(f"dB conversion needs a positive value, got {x!r}")
    return 10.0 * math.log10(x)


def linear_from_db(d: float) -> float:
    return 10.0 ** (d / 10.0)


def combine_powers_db(values: Sequence[float]) -> float:
    """Non-coherent sum of powers given in dB, returned in dB."""
    values = list(values)
    if not values:
        raise ValueError("cannot combine an empty list of powers")
    # factor out the maximum so large dB values do not overflow
    top = max(values)
    total = sum(10.0 ** ((v - top) / 10.0) for v in values)
    return top + 10.0 * math.log10(total)


def received_useful_power(link, p_t: float, y_t: float = 1.0) -> float:
    return link.a_useful * p_t * y_t


def received_interfering_power(link, p_t: float, y_t: float, protection_ratio: float) -> float:
    return link.a_interf * protection_ratio * p_t * y_t


@dataclass(frozen=True)
class PathLossModel:
    """Power-law fading ``reference_loss / d**exponent`` with a hard cutoff.

    Stands in for a real propagation model; links.csv can override it with
    measured or externally computed coefficients.
    """

    reference_loss: float = 1e-3
    exponent: float = 3.5
    interference_margin: float = 1.0
    cutoff_km: float = 80.0

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.reference_loss <= 1:
            out.append("path model: reference_loss must be in (0, 1]")
        if not self.exponent >= 2:
            out.append("path model: exponent must be >= 2")
        if not self.interference_margin >= 1:
            out.append("path model: interference_margin must be >= 1")
        if not self.cutoff_km > 0:
            out.append("path model: cutoff_km must be positive")
        return out


def great_circle_km(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def fading_from_distance(d_km: float, m: PathLossModel) -> tuple[float, float]:
    if d_km > m.cutoff_km:
        return 0.0, 0.0
    d_km = max(d_km, MIN_DISTANCE_KM)
    a = min(1.0, m.reference_loss / d_km ** m.exponent)
    return a, min(1.0, m.interference_margin * a)


def path_fading(tx, rx, m: PathLossModel) -> tuple[float, float]:
    """Return ``(a_useful, a_interf)`` between a transmitter and a receiving point."""
    return fading_from_distance(great_circle_km(tx.lon, tx.lat, rx.lon, rx.lat), m)


def fading_matrix(tx_lonlat: np.ndarray, rx_lonlat: np.ndarray, m: PathLossModel):
    """Vectorised :func:`path_fading` over all receiver/transmitter pairs.

    Returns two ``(n_rx, n_tx)`` arrays. Pairs beyond the cutoff are 0.
    """
    tx = np.radians(np.asarray(tx_lonlat, dtype=float))
    rx = np.radians(np.asarray(rx_lonlat, dtype=float))
    lon_t, lat_t = tx[:, 0][None, :], tx[:, 1][None, :]
    lon_r, lat_r = rx[:, 0][:, None], rx[:, 1][:, None]
    h = (np.sin((lat_t - lat_r) / 2) ** 2
         + np.cos(lat_r) * np.cos(lat_t) * np.sin((lon_t - lon_r) / 2) ** 2)
    d = 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))
    a = np.minimum(1.0, m.reference_loss / np.maximum(d, MIN_DISTANCE_KM) ** m.exponent)
    a = np.where(d > m.cutoff_km, 0.0, a)
    return a, np.minimum(1.0, m.interference_margin * a)

