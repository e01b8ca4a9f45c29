"""Universal Communication Lookup Table: the coordinator's network registry."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, FrozenSet, List, Tuple

from .spectrum import FrequencyBand, bands_overlap


class PermissionMode(IntEnum):
    OPEN = 0
    ALLOW_LIST = 1


@dataclass(frozen=True)
class PermissionSet:
    mode: PermissionMode = PermissionMode.OPEN
    allowed: FrozenSet[int] = frozenset()

    def admits(self, network_id: int) -> bool:
        if self.mode == PermissionMode.OPEN:
            return True
        return network_id in self.allowed


@dataclass(frozen=True)
class AvailabilityWindow:
    start: int
    until: int

    def __post_init__(self):
        if self.start >= self.until:
            raise ValueError(f"availability window [{self.start}, {self.until}) is empty")


@dataclass(frozen=True)
class NetworkRecord:
    network_id: int
    region_id: int
    occupied_bands: Tuple[FrequencyBand, ...]
    idle_bands: Tuple[FrequencyBand, ...]
    permissions: PermissionSet
    availability: AvailabilityWindow


class MalformedRecord(ValueError):
    """A network report whose occupied and idle bands overlap."""


def check_record(record: NetworkRecord) -> None:
    for occ in record.occupied_bands:
        for idle in record.idle_bands:
            if bands_overlap(occ, idle):
                raise MalformedRecord(
                    f"network {record.network_id}: occupied {occ} overlaps idle {idle}")


@dataclass
class Uclt:
    """One record per network, replaced whole on every upsert."""

    records: Dict[int, NetworkRecord] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, network_id: int) -> bool:
        return network_id in self.records

    def get(self, network_id: int) -> NetworkRecord | None:
        return self.records.get(network_id)

    def upsert_record(self, record: NetworkRecord) -> "Uclt":
        check_record(record)
        self.records[record.network_id] = record
        return self

    def purge_expired(self, now: int) -> "Uclt":
        self.records = {nid: r for nid, r in self.records.items() if r.availability.until > now}
        return self

    def lookup_idle_bands(self, requester: int, needed_hz: int, min_duration: int,
                          now: int) -> List[Tuple[int, FrequencyBand]]:
        """Candidate (lessor, band) pairs, ordered by lessor id then low edge.

        Records whose availability window has not opened yet are skipped.
        """
        if needed_hz <= 0 or min_duration <= 0:
            raise ValueError("needed width and minimum duration must be positive")
        out = []
        for nid in sorted(self.records):
            if nid == requester:
                continue
            rec = self.records[nid]
            if not rec.permissions.admits(requester):
                continue
            if rec.availability.start > now or rec.availability.until - now < min_duration:
                continue
            for band in sorted(rec.idle_bands):
                if band.width_hz >= needed_hz:
                    out.append((nid, band))
        return out
