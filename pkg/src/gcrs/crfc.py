"""The Cognitive Radio Function Coordinator.

The coordinator answers spectrum queries from the UCLT, keeps the table of
active leases and revokes them when their primary user returns or their term
runs out. It is a single-threaded state machine; callers serialize access.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Set

from .spectrum import FrequencyBand, bands_overlap
from .uclt import NetworkRecord, Uclt
from .wire import (AccessMode, LeaseGrant, LeaseRevoke, NONE_ID, ResponseStatus,
                   RevokeReason, SpectrumQuery, SpectrumResponse)


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class Lease:
    lease_id: int
    lessor: int
    lessee: int
    band: FrequencyBand
    granted_at: int
    expires_at: int
    mode: AccessMode

    def __post_init__(self):
        if self.granted_at >= self.expires_at:
            raise ValueError(f"lease {self.lease_id}: empty term")
        if self.lessor == self.lessee:
            raise ValueError(f"lease {self.lease_id}: lessor and lessee are the same network")

    def as_grant(self) -> LeaseGrant:
        return LeaseGrant(self.lease_id, self.lessor, self.lessee, self.band.low_hz,
                          self.band.high_hz, self.granted_at, self.expires_at, self.mode)

    def as_revoke(self, reason: RevokeReason) -> LeaseRevoke:
        return LeaseRevoke(self.lease_id, self.lessor, self.lessee, self.band.low_hz,
                           self.band.high_hz, reason)


@dataclass(frozen=True)
class Holdoff:
    """A revoked band that stays blocked until the revoke reaches its lessee."""

    lessor: int
    band: FrequencyBand
    until: int


@dataclass
class QueryResult:
    response: SpectrumResponse
    lease: Optional[Lease] = None


def _no_delay(lessee: int) -> int:
    return 0


@dataclass
class Coordinator:
    networks: Set[int] = field(default_factory=set)
    uclt: Uclt = field(default_factory=Uclt)
    leases: Dict[int, Lease] = field(default_factory=dict)
    holdoffs: List[Holdoff] = field(default_factory=list)
    next_lease_id: int = 1
    # one-way delay towards a lessee; sizes the regrant holdoff after a revoke
    revoke_delay: Callable[[int], int] = _no_delay

    def active_leases(self) -> List[Lease]:
        return [self.leases[k] for k in sorted(self.leases)]

    def _blocked(self, lessor: int, band: FrequencyBand, now: int) -> bool:
        for lease in self.leases.values():
            if lease.lessor == lessor and bands_overlap(lease.band, band):
                return True
        for h in self.holdoffs:
            if h.until > now and h.lessor == lessor and bands_overlap(h.band, band):
                return True
        return False

    def handle_query(self, q: SpectrumQuery, now: int, query_seq: int = 0) -> QueryResult:
        if q.requester not in self.networks:
            return QueryResult(SpectrumResponse(q.requester, query_seq, ResponseStatus.PROTOCOL_ERROR))
        self.holdoffs = [h for h in self.holdoffs if h.until > now]
        candidates = self.uclt.lookup_idle_bands(q.requester, q.width_hz, q.min_duration, now)
        for lessor, band in candidates:
            if self._blocked(lessor, band, now):
                continue
            until = self.uclt.get(lessor).availability.until
            lease = Lease(self.next_lease_id, lessor, q.requester, band, now,
                          min(now + q.lease_duration, until), q.mode)
            self.next_lease_id += 1
            self.leases[lease.lease_id] = lease
            resp = SpectrumResponse(q.requester, query_seq, ResponseStatus.GRANTED,
                                    lease.lease_id, lessor, band.low_hz, band.high_hz,
                                    lease.expires_at, NONE_ID, lease.mode)
            return QueryResult(resp, lease)
        return QueryResult(SpectrumResponse(q.requester, query_seq, ResponseStatus.NO_SPECTRUM,
                                            mode=q.mode))

    def _remove(self, leases: Iterable[Lease], reason: RevokeReason, now: int) -> List[LeaseRevoke]:
        out = []
        for lease in sorted(leases, key=lambda x: x.lease_id):
            del self.leases[lease.lease_id]
            if reason == RevokeReason.PRIMARY_RETURN:
                self.holdoffs.append(
                    Holdoff(lease.lessor, lease.band, now + self.revoke_delay(lease.lessee)))
            out.append(lease.as_revoke(reason))
        return out

    def revoke_on_primary_return(self, lessor: int, band: FrequencyBand, now: int) -> List[LeaseRevoke]:
        hit = [x for x in self.leases.values() if x.lessor == lessor and bands_overlap(x.band, band)]
        return self._remove(hit, RevokeReason.PRIMARY_RETURN, now)

    def expire_leases(self, now: int) -> List[LeaseRevoke]:
        hit = [x for x in self.leases.values() if x.expires_at <= now]
        return self._remove(hit, RevokeReason.EXPIRED, now)

    def apply_update(self, record: NetworkRecord, now: int) -> List[LeaseRevoke]:
        """Store a pushed record; revoke leases on bands it now reports occupied."""
        self.uclt.upsert_record(record)
        revokes = []
        for band in record.occupied_bands:
            revokes.extend(self.revoke_on_primary_return(record.network_id, band, now))
        return revokes

    def check_invariants(self) -> None:
        by_lessor: Dict[int, List[Lease]] = {}
        for lease in self.leases.values():
            by_lessor.setdefault(lease.lessor, []).append(lease)
        for lessor, group in by_lessor.items():
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    if bands_overlap(a.band, b.band):
                        raise InvariantViolation(
                            f"leases {a.lease_id} and {b.lease_id} overlap on lessor {lessor}")
