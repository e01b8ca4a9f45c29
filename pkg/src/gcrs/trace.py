"""Simulation traces: JSON Lines records, comparison and overlap scanning.

The first line of a trace file is a header carrying the run's seed and
clock; every following line is one record with the keys ``tick``, ``seq``,
``kind``, ``src``, ``dst`` and ``payload`` in that order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from .wire import NONE_ID, Payload, UcltUpdate

_NODE_FIELDS = {"requester", "lessor", "lessee", "network", "from_sat", "to_entity"}
_REGION_FIELDS = {"region", "idle_region"}

TRACE_FORMAT = "gcrs-trace/1"


@dataclass
class Trace:
    header: dict
    records: List[dict] = field(default_factory=list)

    def add(self, tick: int, kind: str, src: str = "", dst: str = "", payload: Optional[dict] = None) -> dict:
        rec = {"tick": tick, "seq": len(self.records), "kind": kind, "src": src, "dst": dst,
               "payload": payload or {}}
        self.records.append(rec)
        return rec

    def lines(self) -> List[str]:
        head = {"tick": 0, "seq": -1, "kind": "header", "src": "", "dst": "", "payload": self.header}
        return [_dump(head)] + [_dump(r) for r in self.records]

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    def of_kind(self, *kinds: str) -> List[dict]:
        return [r for r in self.records if r["kind"] in kinds]

    def sends(self) -> List[dict]:
        return self.of_kind("send")


def _dump(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"), ensure_ascii=True)


def parse_trace(text: str) -> Trace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trace file")
    head = json.loads(lines[0])
    if head.get("kind") != "header":
        raise ValueError("trace does not start with a header line")
    return Trace(head["payload"], [json.loads(ln) for ln in lines[1:]])


def read_trace(path) -> Trace:
    return parse_trace(Path(path).read_text())


def first_divergence(a: Iterable[str], b: Iterable[str]) -> Optional[Tuple[int, Optional[str], Optional[str]]]:
    """1-based line number and both lines at the first difference, or None."""
    a, b = list(a), list(b)
    for i in range(max(len(a), len(b))):
        la = a[i] if i < len(a) else None
        lb = b[i] if i < len(b) else None
        if la != lb:
            return i + 1, la, lb
    return None


def summarize(payload: Payload, node_name, region_name) -> dict:
    """Flatten a payload into plain JSON values with scenario names."""
    out = {"msg": type(payload).__name__}
    if isinstance(payload, UcltUpdate):
        r = payload.record
        out.update(network=node_name(r.network_id), region=region_name(r.region_id),
                   occupied=[[b.low_hz, b.high_hz] for b in r.occupied_bands],
                   idle=[[b.low_hz, b.high_hz] for b in r.idle_bands],
                   availability=[r.availability.start, r.availability.until],
                   permissions=r.permissions.mode.name.lower())
        return out
    for f in fields(payload):
        v = getattr(payload, f.name)
        if f.name == "band_high":
            continue
        if f.name == "band_low":
            band = payload.band
            out["band"] = None if band is None else [band.low_hz, band.high_hz]
            continue
        if isinstance(v, bool):
            out[f.name] = v
        elif isinstance(v, Enum):
            out[f.name] = v.name.lower()
        elif f.name in _NODE_FIELDS:
            out[f.name] = None if v == NONE_ID else node_name(v)
        elif f.name in _REGION_FIELDS:
            out[f.name] = None if v == NONE_ID else region_name(v)
        elif f.name == "lease_id" and v == NONE_ID:
            out[f.name] = None
        else:
            out[f.name] = v
    return out


@dataclass(frozen=True)
class Transmission:
    """A span of ticks ``[start, stop)`` during which a lessee used a band."""

    lessee: str
    lessor: str
    band: Tuple[int, int]
    start: int
    stop: int


def lessee_transmissions(trace: Trace, end: int) -> List[Transmission]:
    open_: Dict[Tuple[str, int], dict] = {}
    out = []
    for r in trace.of_kind("tx-start", "tx-stop"):
        key = (r["src"], r["payload"]["lease_id"])
        if r["kind"] == "tx-start":
            open_[key] = r
        else:
            s = open_.pop(key)
            if r["tick"] > s["tick"]:
                out.append(Transmission(s["src"], s["dst"], tuple(s["payload"]["band"]), s["tick"], r["tick"]))
    for s in open_.values():
        if end > s["tick"]:
            out.append(Transmission(s["src"], s["dst"], tuple(s["payload"]["band"]), s["tick"], end))
    return sorted(out, key=lambda t: (t.start, t.lessee, t.band))


def primary_intervals(trace: Trace, end: int) -> Dict[Tuple[str, Tuple[int, int]], List[Tuple[int, int]]]:
    """Ticks ``[start, stop)`` during which each (network, band) had its primary user on air."""
    since: Dict[Tuple[str, Tuple[int, int]], Optional[int]] = {}
    out: Dict[Tuple[str, Tuple[int, int]], List[Tuple[int, int]]] = {}
    for r in trace.of_kind("occupancy"):
        key = (r["src"], tuple(r["payload"]["band"]))
        out.setdefault(key, [])
        occupied = r["payload"]["state"] == "occupied"
        start = since.get(key)
        if occupied and start is None:
            since[key] = r["tick"]
        elif not occupied and start is not None:
            if r["tick"] > start:
                out[key].append((start, r["tick"]))
            since[key] = None
    for key, start in since.items():
        if start is not None and end > start:
            out[key].append((start, end))
    return out


def _overlaps(a: Tuple[int, int], b: Tuple[int, int]) -> bool:
    return max(a[0], b[0]) < min(a[1], b[1])


@dataclass(frozen=True)
class Conflict:
    lessor: str
    band: Tuple[int, int]
    parties: Tuple[str, str]
    start: int
    stop: int


def double_use(trace: Trace, end: int) -> List[Conflict]:
    """Spans where two different lessees used overlapping bands of one lessor."""
    txs = lessee_transmissions(trace, end)
    out = []
    for i, a in enumerate(txs):
        for b in txs[i + 1:]:
            if a.lessor != b.lessor or a.lessee == b.lessee or not _overlaps(a.band, b.band):
                continue
            lo, hi = max(a.start, b.start), min(a.stop, b.stop)
            if lo < hi:
                out.append(Conflict(a.lessor, a.band, (a.lessee, b.lessee), lo, hi))
    return out


def reclaim_overlap(trace: Trace, end: int) -> List[Conflict]:
    """Spans where a lessee was still on a band after its primary user came back."""
    prim = primary_intervals(trace, end)
    out = []
    for t in lessee_transmissions(trace, end):
        for (net, band), spans in prim.items():
            if net != t.lessor or not _overlaps(band, t.band):
                continue
            for s0, s1 in spans:
                lo, hi = max(s0, t.start), min(s1, t.stop)
                if lo < hi:
                    out.append(Conflict(net, band, (net, t.lessee), lo, hi))
    return out


def union_length(spans: Iterable[Tuple[int, int]]) -> int:
    total, cur_lo, cur_hi = 0, None, None
    for lo, hi in sorted(spans):
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def conflict_ticks(conflicts: Iterable[Conflict]) -> int:
    by_lessor: Dict[str, List[Tuple[int, int]]] = {}
    for c in conflicts:
        by_lessor.setdefault(c.lessor, []).append((c.start, c.stop))
    return sum(union_length(v) for v in by_lessor.values())
