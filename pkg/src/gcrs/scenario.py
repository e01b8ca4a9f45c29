"""Scenario documents: loading, validation and node addressing.

A scenario is a JSON document (see scenario.schema.json). Structure is
checked against the schema first; references and cross-field invariants are
checked afterwards. Every problem is reported with its field path and
nothing is returned unless the whole document is valid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import jsonschema

from .spectrum import DowntimeWindow, FrequencyBand, Region, bands_overlap
from .network import Demand, DiurnalModel, MarkovModel, PrimaryUserModel
from .uclt import AvailabilityWindow, PermissionMode
from .wire import AccessMode

CRFC = "crfc"
CRFC_NODE = 0


class ScenarioError(ValueError):
    def __init__(self, errors: List[Tuple[str, str]]):
        self.errors = errors
        super().__init__("\n".join(f"{path}: {msg}" for path, msg in errors))


@dataclass(frozen=True)
class BandConfig:
    band: FrequencyBand
    model: PrimaryUserModel


@dataclass(frozen=True)
class NetworkConfig:
    id: str
    region: str
    bands: Tuple[BandConfig, ...]
    sensing_interval: int = 1
    permission_mode: PermissionMode = PermissionMode.OPEN
    allowed: Tuple[str, ...] = ()
    availability: Optional[AvailabilityWindow] = None
    demand: Optional[Demand] = None


@dataclass(frozen=True)
class LinkSpec:
    id: str
    a: str
    b: str
    delta_ticks: int


@dataclass(frozen=True)
class SatelliteConfig:
    id: str
    region: str
    ring_position: int


@dataclass(frozen=True)
class ScriptedAction:
    at: int
    action: str
    network: Optional[str] = None
    band: Optional[FrequencyBand] = None
    hold_ticks: int = 0
    via: Optional[str] = None


@dataclass(frozen=True)
class ScenarioConfig:
    duration_ticks: int
    regions: Tuple[Region, ...]
    networks: Tuple[NetworkConfig, ...]
    links: Tuple[LinkSpec, ...] = ()
    satellites: Tuple[SatelliteConfig, ...] = ()
    scripted_actions: Tuple[ScriptedAction, ...] = ()
    tick_seconds: int = 60
    global_seed: int = 0


@dataclass
class Directory:
    """Maps scenario names to the integer addresses used on the wire."""

    nodes: Dict[str, int] = field(default_factory=dict)
    regions: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def for_config(cls, config: ScenarioConfig) -> "Directory":
        nodes = {CRFC: CRFC_NODE}
        for name in sorted(n.id for n in config.networks):
            nodes[name] = len(nodes)
        for name in sorted(s.id for s in config.satellites):
            nodes[name] = len(nodes)
        regions = {r.region_id: i + 1 for i, r in enumerate(sorted(config.regions, key=lambda r: r.region_id))}
        return cls(nodes, regions)

    def node_name(self, node: int) -> str:
        for name, n in self.nodes.items():
            if n == node:
                return name
        return f"#{node}"

    def region_name(self, number: int) -> str:
        for name, n in self.regions.items():
            if n == number:
                return name
        return f"#{number}"


def _schema() -> dict:
    return json.loads(resources.files("gcrs").joinpath("scenario.schema.json").read_text())


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _model(doc: dict) -> PrimaryUserModel:
    if doc["kind"] == "diurnal":
        w = doc["window"]
        return DiurnalModel(DowntimeWindow(w["start_local_minutes"], w["duration_minutes"],
                                           w.get("repeats_daily", True)))
    return MarkovModel(float(doc["p_on_to_off"]), float(doc["p_off_to_on"]),
                       doc.get("initial", "occupied") == "occupied")


def parse_scenario(doc: dict) -> ScenarioConfig:
    """Validate a decoded scenario document and build its config."""
    validator = jsonschema.Draft202012Validator(_schema())
    schema_errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if schema_errors:
        raise ScenarioError([(_path(e.absolute_path), e.message) for e in schema_errors])

    errors: List[Tuple[str, str]] = []

    def err(path: str, msg: str) -> None:
        errors.append((path, msg))

    region_ids = [r["id"] for r in doc["regions"]]
    for i, rid in enumerate(region_ids):
        if rid in region_ids[:i]:
            err(f"regions[{i}].id", f"duplicate region id {rid!r}")
    node_names = [CRFC]
    for kind in ("networks", "satellites"):
        for i, item in enumerate(doc.get(kind, [])):
            if item["id"] in node_names:
                err(f"{kind}[{i}].id", f"duplicate node id {item['id']!r}")
            node_names.append(item["id"])
    network_ids = [n["id"] for n in doc["networks"]]

    networks = []
    for i, n in enumerate(doc["networks"]):
        p = f"networks[{i}]"
        if n["region"] not in region_ids:
            err(f"{p}.region", f"unknown region {n['region']!r}")
        bands = []
        seen = []
        for j, b in enumerate(n["bands"]):
            if b["low_hz"] >= b["high_hz"]:
                err(f"{p}.bands[{j}]", "low_hz must be below high_hz")
                continue
            band = FrequencyBand(b["low_hz"], b["high_hz"])
            for k, other in seen:
                if bands_overlap(band, other):
                    err(f"{p}.bands[{j}]", f"{band} overlaps bands[{k}] {other}")
            seen.append((j, band))
            bands.append(BandConfig(band, _model(b["model"])))
        perm = n.get("permissions", {"mode": "open"})
        allowed = tuple(perm.get("allowed", []))
        for j, a in enumerate(allowed):
            if a not in network_ids:
                err(f"{p}.permissions.allowed[{j}]", f"unknown network {a!r}")
        avail = None
        if "availability" in n:
            a = n["availability"]
            if a["from"] >= a["until"]:
                err(f"{p}.availability", "from must be before until")
            else:
                avail = AvailabilityWindow(a["from"], a["until"])
        demand = None
        if "demand" in n:
            d = n["demand"]
            mode = AccessMode.OPPORTUNISTIC if d.get("mode") == "opportunistic" else AccessMode.DYNAMIC
            demand = Demand(d["width_hz"], d["min_duration_ticks"], d["lease_duration_ticks"], mode)
        networks.append(NetworkConfig(
            id=n["id"], region=n["region"], bands=tuple(bands),
            sensing_interval=n.get("sensing_interval", 1),
            permission_mode=PermissionMode.ALLOW_LIST if perm["mode"] == "allow-list" else PermissionMode.OPEN,
            allowed=allowed, availability=avail, demand=demand))

    links = []
    pairs = {}
    for i, ln in enumerate(doc.get("links", [])):
        p = f"links[{i}]"
        ok = True
        for end in ("a", "b"):
            if ln[end] not in node_names:
                err(f"{p}.{end}", f"link {ln['id']!r} references unknown node {ln[end]!r}")
                ok = False
        if ln["a"] == ln["b"]:
            err(p, f"link {ln['id']!r} joins {ln['a']!r} to itself")
            ok = False
        key = frozenset((ln["a"], ln["b"]))
        if ok and key in pairs:
            err(p, f"link {ln['id']!r} duplicates link {pairs[key]!r}")
        pairs[key] = ln["id"]
        links.append(LinkSpec(ln["id"], ln["a"], ln["b"], ln["delta_ticks"]))
    link_ids = [ln.id for ln in links]
    for i, lid in enumerate(link_ids):
        if lid in link_ids[:i]:
            err(f"links[{i}].id", f"duplicate link id {lid!r}")

    sats = []
    sat_docs = doc.get("satellites", [])
    for i, s in enumerate(sat_docs):
        p = f"satellites[{i}]"
        if s["region"] not in region_ids:
            err(f"{p}.region", f"unknown region {s['region']!r}")
        elif [x["region"] for x in sat_docs].count(s["region"]) > 1:
            err(f"{p}.region", f"region {s['region']!r} has more than one satellite")
        else:
            members = [n["id"] for n in doc["networks"] if n["region"] == s["region"]]
            if len(members) != 1:
                err(f"{p}.region", f"region {s['region']!r} must hold exactly one network, has {len(members)}")
        sats.append(SatelliteConfig(s["id"], s["region"], s["ring_position"]))
    if sorted(s.ring_position for s in sats) != list(range(len(sats))):
        err("satellites", "ring positions must be a permutation of 0..N-1")

    actions = []
    by_id = {n.id: n for n in networks}
    for i, a in enumerate(doc.get("scripted_actions", [])):
        p = f"scripted_actions[{i}]"
        band = None
        if a["action"] in ("primary-return", "query"):
            if "network" not in a:
                err(p, f"{a['action']} needs a network")
            elif a["network"] not in by_id:
                err(f"{p}.network", f"unknown network {a['network']!r}")
        if a["action"] == "primary-return":
            if "band" not in a:
                err(p, "primary-return needs a band")
            elif a.get("network") in by_id:
                b = a["band"]
                owned = [bc.band for bc in by_id[a["network"]].bands]
                if (b["low_hz"], b["high_hz"]) not in [(x.low_hz, x.high_hz) for x in owned]:
                    err(f"{p}.band", f"network {a['network']!r} owns no band [{b['low_hz']},{b['high_hz']})")
                else:
                    band = FrequencyBand(b["low_hz"], b["high_hz"])
        if a["action"] == "cascade-reversal" and not sats:
            err(p, "cascade-reversal needs satellites")
        if a.get("via") == "satellite" and not sats:
            err(f"{p}.via", "no satellites configured")
        actions.append(ScriptedAction(a["at"], a["action"], a.get("network"), band,
                                      a.get("hold_ticks", 0), a.get("via")))

    if errors:
        raise ScenarioError(errors)
    return ScenarioConfig(
        duration_ticks=doc["duration_ticks"],
        regions=tuple(Region(r["id"], r["utc_offset_minutes"]) for r in doc["regions"]),
        networks=tuple(networks),
        links=tuple(links),
        satellites=tuple(sats),
        scripted_actions=tuple(sorted(actions, key=lambda x: x.at)),
        tick_seconds=doc.get("tick_seconds", 60),
        global_seed=doc.get("global_seed", 0),
    )


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError([(str(path), f"cannot read: {exc.strerror}")]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([(f"{path}:{exc.lineno}:{exc.colno}", f"parse error: {exc.msg}")]) from exc
    return parse_scenario(doc)
