"""Matplotlib figures for the report: power factors, population gains and the maps.

Figures are written with the Agg backend and without creation metadata, so
identical inputs give identical PNG bytes.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluate import Evaluation  # noqa: E402
from .maprender import Raster  # noqa: E402
from .scenario import Scenario, id_key  # noqa: E402

_PNG_META = {"Software": None}
DPI = 100


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=DPI, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_power_factors(s: Scenario, y: Mapping[str, float], path) -> Path:
    """Current and optimised power of each optimisable transmitter (log scale)."""
    txs = sorted((t for t in s.transmitters if t.optimizable), key=lambda t: id_key(t.id))
    before = np.array([t.power_w for t in txs])
    after = np.array([t.power_w * y.get(t.id, 1.0) for t in txs])
    order = np.argsort(-before, kind="stable")
    fig, ax = plt.subplots(figsize=(8, 4))
    x = np.arange(len(txs))
    ax.bar(x, before[order], color="0.75", label="current")
    ax.bar(x, np.maximum(after[order], 1e-3), color="tab:blue", label="optimised")
    ax.set_yscale("log")
    ax.set_xlabel("transmitter (sorted by current power)")
    ax.set_ylabel("radiated power [W]")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_population_gain(e: Evaluation, path, top_n: int = 20) -> Path:
    """Served population now and after, for the networks with the largest gain."""
    rows = sorted(e.networks, key=lambda r: (-r.delta, id_key(r.network_id)))[:top_n]
    fig, ax = plt.subplots(figsize=(8, 4))
    x = np.arange(len(rows))
    ax.bar(x - 0.2, [r.population_now for r in rows], width=0.4, color="0.6", label="now")
    ax.bar(x + 0.2, [r.population_after for r in rows], width=0.4, color="tab:green", label="after")
    ax.set_xticks(x)
    ax.set_xticklabels([r.network_id for r in rows], rotation=90, fontsize=7)
    ax.set_xlabel("network")
    ax.set_ylabel("served population")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_raster(raster: Raster, path, title: str = "") -> Path:
    """A rendered map with lon/lat axes."""
    g = raster.grid
    fig, ax = plt.subplots(figsize=(6, 6 * g.height / max(g.width, 1) + 0.5))
    ax.imshow(raster.rgb, extent=(g.lon_min, g.lon_min + g.width * g.pixel_deg,
                                  g.lat_max - g.height * g.pixel_deg, g.lat_max),
              interpolation="nearest")
    ax.set_xlabel("longitude [deg]")
    ax.set_ylabel("latitude [deg]")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
