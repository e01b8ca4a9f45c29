"""Run metrics recomputed from a trace."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

from .scenario import CRFC, ScenarioConfig
from .trace import (Trace, conflict_ticks, double_use, lessee_transmissions, primary_intervals,
                    reclaim_overlap, union_length)


@dataclass
class BandUtilization:
    network: str
    band: Tuple[int, int]
    utilization: float
    primary_ticks: int
    leased_ticks: int


@dataclass
class MetricsReport:
    duration_ticks: int
    utilization: List[BandUtilization] = field(default_factory=list)
    lease_grants: int = 0
    lease_denials: int = 0
    revocations: int = 0
    mean_grant_latency_ticks: Optional[float] = None
    decode_errors: int = 0
    routing_errors: int = 0
    cascades: int = 0
    freed_satellites: List[str] = field(default_factory=list)
    double_use_ticks: int = 0
    reclaim_overlap_ticks: int = 0

    def utilization_of(self, network: str, band: Tuple[int, int]) -> float:
        for u in self.utilization:
            if u.network == network and u.band == tuple(band):
                return u.utilization
        raise KeyError((network, band))

    def to_dict(self) -> dict:
        d = asdict(self)
        for u in d["utilization"]:
            u["band"] = list(u["band"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def table(self) -> str:
        rows = [("network", "band", "utilization", "primary", "leased")]
        for u in self.utilization:
            rows.append((u.network, f"[{u.band[0]},{u.band[1]})", f"{u.utilization:.3f}",
                         str(u.primary_ticks), str(u.leased_ticks)))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = []
        for k, r in enumerate(rows):
            cells = [r[0].ljust(widths[0]), r[1].ljust(widths[1])]
            cells += [c.rjust(w) for c, w in zip(r[2:], widths[2:])]
            lines.append("  ".join(cells).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        latency = "-" if self.mean_grant_latency_ticks is None else f"{self.mean_grant_latency_ticks:.2f}"
        counters = [
            ("duration_ticks", str(self.duration_ticks)),
            ("lease_grants", str(self.lease_grants)),
            ("lease_denials", str(self.lease_denials)),
            ("revocations", str(self.revocations)),
            ("mean_grant_latency_ticks", latency),
            ("decode_errors", str(self.decode_errors)),
            ("routing_errors", str(self.routing_errors)),
            ("cascades", str(self.cascades)),
            ("double_use_ticks", str(self.double_use_ticks)),
            ("reclaim_overlap_ticks", str(self.reclaim_overlap_ticks)),
        ]
        if self.freed_satellites:
            counters.append(("freed_satellites", ",".join(self.freed_satellites)))
        kw = max(len(k) for k, _ in counters)
        lines.append("")
        lines += [f"{k.ljust(kw)}  {v}" for k, v in counters]
        return "\n".join(lines) + "\n"


def compute_metrics(trace: Trace, config: ScenarioConfig) -> MetricsReport:
    end = config.duration_ticks
    report = MetricsReport(duration_ticks=end)
    networks = {n.id for n in config.networks}

    primary = primary_intervals(trace, end)
    leased: Dict[Tuple[str, Tuple[int, int]], List[Tuple[int, int]]] = {}
    for tx in lessee_transmissions(trace, end):
        leased.setdefault((tx.lessor, tx.band), []).append((tx.start, tx.stop))
    for n in sorted(config.networks, key=lambda n: n.id):
        for bc in n.bands:
            key = (n.id, (bc.band.low_hz, bc.band.high_hz))
            p, l = primary.get(key, []), leased.get(key, [])
            busy = union_length(p + l)
            report.utilization.append(BandUtilization(
                n.id, key[1], busy / end if end else 0.0, union_length(p), union_length(l)))

    query_sent: Dict[Tuple[str, int], int] = {}
    latencies = []
    for r in trace.records:
        kind, pl = r["kind"], r["payload"]
        msg = pl.get("msg")
        if kind == "send":
            if msg == "SpectrumQuery" and r["dst"] == CRFC:
                query_sent[(r["src"], pl["seq"])] = r["tick"]
            elif msg == "SpectrumResponse" and r["src"] == CRFC and r["dst"] in networks:
                if pl["status"] == "granted":
                    report.lease_grants += 1
                elif pl["status"] == "no_spectrum":
                    report.lease_denials += 1
            elif msg == "LeaseRevoke" and r["src"] == CRFC:
                report.revocations += 1
        elif kind == "deliver" and msg == "SpectrumResponse" and pl["status"] == "granted":
            sent = query_sent.get((r["dst"], pl["query_seq"]))
            if sent is not None:
                latencies.append(r["tick"] - sent)
        elif kind == "decode-error":
            report.decode_errors += 1
        elif kind == "routing-error":
            report.routing_errors += 1
        elif kind == "cascade":
            report.cascades += 1
            report.freed_satellites.append(pl["freed"])
    if latencies:
        report.mean_grant_latency_ticks = sum(latencies) / len(latencies)
    report.double_use_ticks = conflict_ticks(double_use(trace, end))
    report.reclaim_overlap_ticks = conflict_ticks(reclaim_overlap(trace, end))
    return report
