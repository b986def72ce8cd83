"""World model: transmitters, networks, receiving points and reception links.

A scenario directory holds ``config.txt`` plus four CSV tables (see README).
When ``links.csv`` is missing the fading coefficients are computed with a
:class:`~fmpower.propagation.PathLossModel` whose parameters live in the
config file.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .propagation import PathLossModel, fading_matrix

NETWORKS_HEADER = ["id", "admin", "name"]
TRANSMITTERS_HEADER = ["id", "network_id", "admin", "freq_khz", "power_w", "lon", "lat", "optimizable"]
RECEIVERS_HEADER = ["id", "admin", "lon", "lat", "population"]
LINKS_HEADER = ["receiver_id", "transmitter_id", "a_useful", "a_interf"]

REQUIRED_CONFIG = ("p_min_w", "theta", "protection_ratio", "p_max_w")
OPTIONAL_CONFIG = ("reception_floor_w", "interference_cutoff_w", "field_offset_db")
PATH_CONFIG = {
    "reference_loss": "reference_loss",
    "path_exponent": "exponent",
    "interference_margin": "interference_margin",
    "cutoff_km": "cutoff_km",
}

_ID_RE = re.compile(r"^[A-Za-z0-9_.]+$")

# isotropic receiving antenna at 100 MHz: E[dBuV/m] = P[dBm] + 77.2 + 20 log10(100)
DEFAULT_FIELD_OFFSET_DB = 117.2


class ScenarioError(Exception):
    """Raised for unreadable or invalid scenario input."""

    def __init__(self, message: str, violations: Optional[list[str]] = None):
        super().__init__(message)
        self.violations = list(violations or [])


def id_key(ident: str):
    """Sort key ordering numeric ids numerically and the rest lexically."""
    return (0, int(ident), "") if ident.isdigit() else (1, 0, ident)


@dataclass(frozen=True)
class RadioParams:
    p_min_w: float
    theta: float
    protection_ratio: float
    p_max_w: float
    reception_floor_w: Optional[float] = None
    interference_cutoff_w: Optional[float] = None
    field_offset_db: float = DEFAULT_FIELD_OFFSET_DB

    def __post_init__(self):
        if self.reception_floor_w is None:
            object.__setattr__(self, "reception_floor_w", self.p_min_w)
        if self.interference_cutoff_w is None:
            object.__setattr__(self, "interference_cutoff_w", self.p_min_w / 100.0)


@dataclass(frozen=True)
class Network:
    id: str
    admin: str
    name: str = ""


@dataclass(frozen=True)
class Transmitter:
    id: str
    network_id: str
    admin: str
    freq_khz: int
    power_w: float
    lon: float
    lat: float
    optimizable: bool = True


@dataclass(frozen=True)
class ReceivingPoint:
    id: str
    admin: str
    lon: float
    lat: float
    population: int


@dataclass(frozen=True, slots=True)
class ReceptionLink:
    receiver_id: str
    transmitter_id: str
    a_useful: float
    a_interf: float


@dataclass(frozen=True)
class Scenario:
    """Immutable world model.

    ``path_model`` is set when the links were computed rather than read from
    ``links.csv``; :func:`write_scenario` then omits the links file.
    """

    radio_params: RadioParams
    networks: tuple[Network, ...]
    transmitters: tuple[Transmitter, ...]
    receivers: tuple[ReceivingPoint, ...]
    links: tuple[ReceptionLink, ...]
    path_model: Optional[PathLossModel] = None

    @cached_property
    def network_by_id(self) -> dict[str, Network]:
        return {n.id: n for n in self.networks}

    @cached_property
    def tx_by_id(self) -> dict[str, Transmitter]:
        return {t.id: t for t in self.transmitters}

    @cached_property
    def receiver_by_id(self) -> dict[str, ReceivingPoint]:
        return {r.id: r for r in self.receivers}

    @cached_property
    def links_by_receiver(self) -> dict[str, tuple[ReceptionLink, ...]]:
        out: dict[str, list[ReceptionLink]] = {r.id: [] for r in self.receivers}
        for link in self.links:
            out.setdefault(link.receiver_id, []).append(link)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def links_by_transmitter(self) -> dict[str, tuple[ReceptionLink, ...]]:
        out: dict[str, list[ReceptionLink]] = {t.id: [] for t in self.transmitters}
        for link in self.links:
            out.setdefault(link.transmitter_id, []).append(link)
        return {k: tuple(v) for k, v in out.items()}

    def received_at(self, receiver_id: str) -> list[tuple[Transmitter, ReceptionLink]]:
        """Transmitters in T(r): useful power at full power reaches the reception floor."""
        floor = self.radio_params.reception_floor_w
        out = []
        for link in self.links_by_receiver.get(receiver_id, ()):
            tx = self.tx_by_id.get(link.transmitter_id)
            if tx is not None and link.a_useful * tx.power_w >= floor:
                out.append((tx, link))
        return out

    @property
    def optimizable_ids(self) -> list[str]:
        return [t.id for t in self.transmitters if t.optimizable]

    @property
    def channels(self) -> list[int]:
        return sorted({t.freq_khz for t in self.transmitters})


# ---------------------------------------------------------------------------
# validation


def validate_scenario(s: Scenario) -> list[str]:
    """Return one message per violated invariant; empty when the scenario is valid."""
    out: list[str] = []
    rp = s.radio_params
    for name in ("p_min_w", "theta", "protection_ratio", "p_max_w", "interference_cutoff_w"):
        v = getattr(rp, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            out.append(f"radio params: {name} must be positive")
    if not (math.isfinite(rp.reception_floor_w) and rp.reception_floor_w >= 0):
        out.append("radio params: reception_floor_w must be >= 0")
    if not math.isfinite(rp.field_offset_db):
        out.append("radio params: field_offset_db must be finite")
    if s.path_model is not None:
        out.extend(s.path_model.problems())

    def check_ids(kind, items):
        seen = set()
        for it in items:
            if not _ID_RE.match(it.id):
                out.append(f"{kind} {it.id!r}: id must match [A-Za-z0-9_.]+")
            if it.id in seen:
                out.append(f"{kind} {it.id}: duplicate id")
            seen.add(it.id)

    check_ids("network", s.networks)
    check_ids("transmitter", s.transmitters)
    check_ids("receiver", s.receivers)

    networks = s.network_by_id
    for t in s.transmitters:
        if not (math.isfinite(t.power_w) and t.power_w > 0):
            out.append(f"transmitter {t.id}: power must be positive")
        elif t.power_w > rp.p_max_w:
            out.append(f"transmitter {t.id}: power exceeds p_max")
        if t.network_id not in networks:
            out.append(f"transmitter {t.id}: dangling reference to network {t.network_id}")
        elif networks[t.network_id].admin != t.admin:
            out.append(f"transmitter {t.id}: admin {t.admin} differs from its network's {networks[t.network_id].admin}")
        if t.freq_khz <= 0:
            out.append(f"transmitter {t.id}: frequency must be positive")
        if not (-180 <= t.lon <= 180 and -90 <= t.lat <= 90):
            out.append(f"transmitter {t.id}: coordinates out of range")
    for r in s.receivers:
        if not r.population >= 0:
            out.append(f"receiver {r.id}: population must be >= 0")
        if not (-180 <= r.lon <= 180 and -90 <= r.lat <= 90):
            out.append(f"receiver {r.id}: coordinates out of range")

    txs, rxs = s.tx_by_id, s.receiver_by_id
    seen_pairs = set()
    for link in s.links:
        pair = (link.receiver_id, link.transmitter_id)
        tag = f"link ({link.receiver_id},{link.transmitter_id})"
        if link.receiver_id not in rxs:
            out.append(f"{tag}: dangling reference to receiver {link.receiver_id}")
        if link.transmitter_id not in txs:
            out.append(f"{tag}: dangling reference to transmitter {link.transmitter_id}")
        if not 0 <= link.a_useful <= 1 or not 0 <= link.a_interf <= 1:
            out.append(f"{tag}: fading coefficient out of [0,1]")
        if pair in seen_pairs:
            out.append(f"{tag}: duplicate link")
        seen_pairs.add(pair)
    return out


# ---------------------------------------------------------------------------
# file IO


def _parse_config(path: Path) -> dict[str, float]:
    values: dict[str, float] = {}
    known = set(REQUIRED_CONFIG) | set(OPTIONAL_CONFIG) | set(PATH_CONFIG)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ScenarioError(f"{path.name}:{lineno}: expected 'key = value'")
            if key not in known:
                raise ScenarioError(f"{path.name}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ScenarioError(f"{path.name}:{lineno}: duplicate key {key!r}")
            try:
                values[key] = float(value)
            except ValueError:
                raise ScenarioError(f"{path.name}:{lineno}: {key} is not a number: {value!r}") from None
    missing = [k for k in REQUIRED_CONFIG if k not in values]
    if missing:
        raise ScenarioError(f"{path.name}: missing keys {', '.join(missing)}")
    return values


def _read_table(path: Path, header: list[str], converters: dict):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != header:
            raise ScenarioError(f"{path.name}:1: header must be {','.join(header)}")
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise ScenarioError(f"{path.name}:{lineno}: expected {len(header)} columns, got {len(row)}")
            rec = {}
            for col, (name, value) in enumerate(zip(header, row), 1):
                conv = converters.get(name, str)
                try:
                    rec[name] = conv(value)
                except ValueError:
                    raise ScenarioError(
                        f"{path.name}:{lineno}: column {col} ({name}): cannot parse {value!r}") from None
            yield rec


def _flag(value: str) -> bool:
    if value not in ("0", "1"):
        raise ValueError(value)
    return value == "1"


def load_scenario(dir_path) -> Scenario:
    """Read and validate a scenario directory. Raises :class:`ScenarioError`."""
    d = Path(dir_path)
    for name in ("config.txt", "networks.csv", "transmitters.csv", "receivers.csv"):
        if not (d / name).is_file():
            raise ScenarioError(f"missing file: {d / name}")
    cfg = _parse_config(d / "config.txt")
    params = RadioParams(
        p_min_w=cfg["p_min_w"], theta=cfg["theta"],
        protection_ratio=cfg["protection_ratio"], p_max_w=cfg["p_max_w"],
        reception_floor_w=cfg.get("reception_floor_w"),
        interference_cutoff_w=cfg.get("interference_cutoff_w"),
        field_offset_db=cfg.get("field_offset_db", DEFAULT_FIELD_OFFSET_DB),
    )
    networks = tuple(Network(**rec) for rec in _read_table(d / "networks.csv", NETWORKS_HEADER, {}))
    transmitters = tuple(Transmitter(**rec) for rec in _read_table(
        d / "transmitters.csv", TRANSMITTERS_HEADER,
        {"freq_khz": int, "power_w": float, "lon": float, "lat": float, "optimizable": _flag}))
    receivers = tuple(ReceivingPoint(**rec) for rec in _read_table(
        d / "receivers.csv", RECEIVERS_HEADER, {"lon": float, "lat": float, "population": int}))

    links_path = d / "links.csv"
    if links_path.is_file():
        if any(k in cfg for k in PATH_CONFIG):
            raise ScenarioError(f"{d / 'config.txt'}: path model keys given together with links.csv")
        links = tuple(ReceptionLink(**rec) for rec in _read_table(
            links_path, LINKS_HEADER, {"a_useful": float, "a_interf": float}))
        s = Scenario(params, networks, transmitters, receivers, links)
    else:
        model = PathLossModel(**{attr: cfg[key] for key, attr in PATH_CONFIG.items() if key in cfg})
        problems = model.problems()
        if problems:
            raise ScenarioError(f"invalid path model in {d / 'config.txt'}", problems)
        s = Scenario(params, networks, transmitters, receivers,
                     compute_links(transmitters, receivers, model), model)

    problems = validate_scenario(s)
    if problems:
        raise ScenarioError(f"invalid scenario {d}: {problems[0]}", problems)
    return s


def compute_links(transmitters, receivers, model: PathLossModel) -> tuple[ReceptionLink, ...]:
    """Links for every (receiver, transmitter) pair inside the model cutoff."""
    if not transmitters or not receivers:
        return ()
    tx_ll = np.array([(t.lon, t.lat) for t in transmitters])
    rx_ll = np.array([(r.lon, r.lat) for r in receivers])
    out = []
    # chunk over receivers to bound memory on large scenarios
    for start in range(0, len(receivers), 2048):
        au, ai = fading_matrix(tx_ll, rx_ll[start:start + 2048], model)
        for i, j in zip(*np.nonzero(au > 0)):
            out.append(ReceptionLink(receivers[start + i].id, transmitters[j].id,
                                     float(au[i, j]), float(ai[i, j])))
    return tuple(out)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_scenario(s: Scenario, dir_path) -> Path:
    """Write ``s`` so that :func:`load_scenario` reads back an equal scenario."""
    d = Path(dir_path)
    d.mkdir(parents=True, exist_ok=True)
    rp = s.radio_params
    lines = [
        "# radio parameters, linear units (W, ratios)",
        f"p_min_w = {_fmt(rp.p_min_w)}",
        f"theta = {_fmt(rp.theta)}",
        f"protection_ratio = {_fmt(rp.protection_ratio)}",
        f"p_max_w = {_fmt(rp.p_max_w)}",
        f"reception_floor_w = {_fmt(rp.reception_floor_w)}",
        f"interference_cutoff_w = {_fmt(rp.interference_cutoff_w)}",
        f"field_offset_db = {_fmt(rp.field_offset_db)}",
    ]
    if s.path_model is not None:
        lines.append("# synthetic path-loss model (links.csv absent)")
        for key, attr in PATH_CONFIG.items():
            lines.append(f"{key} = {_fmt(getattr(s.path_model, attr))}")
    (d / "config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    def dump(name, header, rows):
        with open(d / name, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    dump("networks.csv", NETWORKS_HEADER, [(n.id, n.admin, n.name) for n in s.networks])
    dump("transmitters.csv", TRANSMITTERS_HEADER, [
        (t.id, t.network_id, t.admin, t.freq_khz, _fmt(t.power_w), _fmt(t.lon), _fmt(t.lat),
         int(t.optimizable)) for t in s.transmitters])
    dump("receivers.csv", RECEIVERS_HEADER, [
        (r.id, r.admin, _fmt(r.lon), _fmt(r.lat), r.population) for r in s.receivers])
    links_path = d / "links.csv"
    if s.path_model is None:
        dump("links.csv", LINKS_HEADER, [
            (l.receiver_id, l.transmitter_id, _fmt(l.a_useful), _fmt(l.a_interf)) for l in s.links])
    elif links_path.exists():
        links_path.unlink()
    return d


# ---------------------------------------------------------------------------
# synthetic scenarios

DOMESTIC_ADMIN = "DOM"
FOREIGN_ADMIN = "FOR"
FM_BAND_START_KHZ = 87600
CHANNEL_STEP_KHZ = 100
# puts the default interference cutoff (1e-7 W, -40 dBm) on the 20 dB(uV/m) map band
SYNTHETIC_FIELD_OFFSET_DB = 60.0


@dataclass(frozen=True)
class SyntheticParams:
    """Counts and geography for :func:`generate_synthetic`.

    The region box is split at ``border_fraction`` of its width: receivers
    and transmitters west of the border belong to the domestic
    administration, the rest to the foreign one. Populations are
    ``round(lognormal(log(population_median), population_sigma))``;
    powers are log-uniform in ``[power_min_w, power_max_w]``. With
    ``n_towns > 0`` all but ``rural_fraction`` of the receivers are drawn
    around uniformly placed town centres (normal spread
    ``town_spread_deg``, clipped to the box); otherwise receivers are
    uniform over the box.
    """

    n_networks: int = 4
    n_transmitters: int = 12
    n_receivers: int = 200
    n_channels: int = 4
    box: tuple[float, float, float, float] = (12.0, 41.0, 13.0, 42.0)  # lon_min, lat_min, lon_max, lat_max
    border_fraction: float = 0.7
    foreign_network_share: float = 0.25
    n_towns: int = 0
    town_spread_deg: float = 0.1
    rural_fraction: float = 0.3
    population_median: float = 1000.0
    population_sigma: float = 1.0
    power_min_w: float = 100.0
    power_max_w: float = 10000.0
    radio: RadioParams = field(default_factory=lambda: RadioParams(
        p_min_w=1e-5, theta=10 ** (-15 / 10), protection_ratio=100.0, p_max_w=10000.0,
        field_offset_db=SYNTHETIC_FIELD_OFFSET_DB))
    path_model: PathLossModel = field(default_factory=PathLossModel)


PRESETS = {
    "small": SyntheticParams(),
    "benchmark": SyntheticParams(
        n_networks=40, n_transmitters=200, n_receivers=5000, n_channels=30,
        box=(9.0, 39.0, 15.0, 44.0), n_towns=60),
}


def generate_synthetic(seed: int, params: SyntheticParams = SyntheticParams()) -> Scenario:
    """Seeded random scenario with a domestic and a foreign administration."""
    p = params
    if min(p.n_networks, p.n_transmitters, p.n_receivers, p.n_channels) < 1:
        raise ValueError("counts must be >= 1")
    lon0, lat0, lon1, lat1 = p.box
    if not (lon1 > lon0 and lat1 > lat0):
        raise ValueError("degenerate region box")
    rng = np.random.default_rng(seed)
    border = lon0 + p.border_fraction * (lon1 - lon0)

    n_foreign = min(p.n_networks - 1, round(p.foreign_network_share * p.n_networks)) if p.n_networks > 1 else 0
    n_foreign = max(n_foreign, 1) if p.n_networks > 1 else 0
    networks = []
    for k in range(p.n_networks):
        admin = FOREIGN_ADMIN if k >= p.n_networks - n_foreign else DOMESTIC_ADMIN
        networks.append(Network(str(k + 1), admin, f"net{k + 1}"))

    log_lo, log_hi = math.log10(p.power_min_w), math.log10(p.power_max_w)
    transmitters = []
    net_idx = rng.integers(0, p.n_networks, p.n_transmitters)
    chan_idx = rng.integers(0, p.n_channels, p.n_transmitters)
    for k in range(p.n_transmitters):
        net = networks[net_idx[k]]
        if net.admin == DOMESTIC_ADMIN:
            lon = rng.uniform(lon0, border)
        else:
            lon = rng.uniform(border, lon1)
        lat = rng.uniform(lat0, lat1)
        power = round(10 ** rng.uniform(log_lo, log_hi), 1)
        transmitters.append(Transmitter(
            id=str(k + 1), network_id=net.id, admin=net.admin,
            freq_khz=FM_BAND_START_KHZ + CHANNEL_STEP_KHZ * int(chan_idx[k]),
            power_w=min(power, p.radio.p_max_w), lon=round(lon, 5), lat=round(lat, 5),
            optimizable=net.admin == DOMESTIC_ADMIN))

    receivers = []
    lons = rng.uniform(lon0, lon1, p.n_receivers)
    lats = rng.uniform(lat0, lat1, p.n_receivers)
    if p.n_towns > 0:
        centres = np.column_stack([rng.uniform(lon0, lon1, p.n_towns), rng.uniform(lat0, lat1, p.n_towns)])
        n_town = p.n_receivers - int(round(p.rural_fraction * p.n_receivers))
        pick = rng.integers(0, p.n_towns, n_town)
        spread = rng.normal(0.0, p.town_spread_deg, (n_town, 2))
        lons[:n_town] = np.clip(centres[pick, 0] + spread[:, 0], lon0, lon1)
        lats[:n_town] = np.clip(centres[pick, 1] + spread[:, 1], lat0, lat1)
    pops = rng.lognormal(math.log(p.population_median), p.population_sigma, p.n_receivers)
    for k in range(p.n_receivers):
        lon = round(float(lons[k]), 5)
        receivers.append(ReceivingPoint(
            id=str(k + 1), admin=DOMESTIC_ADMIN if lon < border else FOREIGN_ADMIN,
            lon=lon, lat=round(float(lats[k]), 5), population=int(round(pops[k]))))

    transmitters, receivers = tuple(transmitters), tuple(receivers)
    return Scenario(p.radio, tuple(networks), transmitters, receivers,
                    compute_links(transmitters, receivers, p.path_model), p.path_model)

