"""A regional network: primary-user occupancy, sampled sensing and leasing.

Each own band is driven by a primary-user model. Diurnal bands are idle
exactly during their downtime window; Markov bands flip between occupied and
idle once per tick using the network's own seeded generator, so adding a
network never perturbs another network's random stream.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from .spectrum import (DEFAULT_TICK_SECONDS, DowntimeWindow, FrequencyBand, Region,
                       bands_overlap, downtime_end, is_downtime)
from .uclt import AvailabilityWindow, NetworkRecord, PermissionSet
from .wire import (AccessMode, LeaseGrant, LeaseRevoke, Payload, RevokeReason, SpectrumQuery,
                   SpectrumResponse, UcltUpdate)


class Occupancy(Enum):
    OCCUPIED = "occupied"
    IDLE = "idle"
    LEASED_OUT = "leased-out"
    LEASED_IN = "leased-in"


class SenseResult(Enum):
    HOLE_DETECTED = "hole-detected"
    PRIMARY_PRESENT = "primary-present"


@dataclass(frozen=True)
class DiurnalModel:
    window: DowntimeWindow


@dataclass(frozen=True)
class MarkovModel:
    p_on_to_off: float
    p_off_to_on: float
    initially_occupied: bool = True

    def __post_init__(self):
        for p in (self.p_on_to_off, self.p_off_to_on):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"transition probability {p} outside [0, 1]")


PrimaryUserModel = Union[DiurnalModel, MarkovModel]


@dataclass(frozen=True)
class Demand:
    """What a busy network asks the coordinator for."""

    width_hz: int
    min_duration: int
    lease_duration: int
    mode: AccessMode = AccessMode.DYNAMIC


@dataclass
class OwnBand:
    band: FrequencyBand
    model: PrimaryUserModel
    state: Occupancy = Occupancy.OCCUPIED
    pinned_until: int = -1
    lease_id: Optional[int] = None
    lessee: int = 0
    lease_expires: int = 0
    last_occupied: int = -(2 ** 62)

    @property
    def primary_present(self) -> bool:
        return self.state == Occupancy.OCCUPIED


@dataclass
class LeasedIn:
    lease_id: int
    lessor: int
    band: FrequencyBand
    expires_at: int
    since: int


@dataclass(frozen=True)
class Transition:
    index: int
    band: FrequencyBand
    state: Occupancy
    # primary-return notice for the coordinator when the band was leased out
    notice: Optional[LeaseRevoke] = None


def derive_seed(global_seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{global_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class NetworkState:
    def __init__(self, network_id: int, region: Region, region_number: int,
                 bands: List[Tuple[FrequencyBand, PrimaryUserModel]], *,
                 sensing_interval: int = 1, rng_seed: int = 0,
                 permissions: PermissionSet = PermissionSet(),
                 availability: Optional[AvailabilityWindow] = None,
                 demand: Optional[Demand] = None,
                 tick_seconds: int = DEFAULT_TICK_SECONDS,
                 uplink_delay: int = 0):
        if sensing_interval < 1:
            raise ValueError("sensing interval must be at least one tick")
        for i, (a, _) in enumerate(bands):
            for b, _ in bands[i + 1:]:
                if bands_overlap(a, b):
                    raise ValueError(f"network {network_id}: bands {a} and {b} overlap")
        self.network_id = network_id
        self.region = region
        self.region_number = region_number
        self.sensing_interval = sensing_interval
        self.rng_seed = rng_seed
        self.rng = random.Random(rng_seed)
        self.permissions = permissions
        self.availability = availability or AvailabilityWindow(0, 2 ** 63)
        self.demand = demand
        self.tick_seconds = tick_seconds
        self.uplink_delay = uplink_delay
        self.bands = [OwnBand(band, model) for band, model in bands]
        self.leased_in: Dict[int, LeasedIn] = {}
        # a query is in flight; no new one is sent until its response lands
        self.awaiting = False
        self.now = 0
        for ob in self.bands:
            if self._initial_presence(ob):
                ob.state, ob.last_occupied = Occupancy.OCCUPIED, 0
            else:
                ob.state = Occupancy.IDLE
        self.readings = [ob.primary_present for ob in self.bands]
        self.sensed_at = 0

    def _initial_presence(self, ob: OwnBand) -> bool:
        if isinstance(ob.model, DiurnalModel):
            return not is_downtime(ob.model.window, self.region, 0, self.tick_seconds)
        return ob.model.initially_occupied

    def index_of(self, band: FrequencyBand) -> int:
        for i, ob in enumerate(self.bands):
            if ob.band == band:
                return i
        raise KeyError(f"network {self.network_id} owns no band {band}")

    def occupancy(self, band: FrequencyBand) -> Occupancy:
        for lease in self.leased_in.values():
            if lease.band == band:
                return Occupancy.LEASED_IN
        return self.bands[self.index_of(band)].state

    # -- primary users ------------------------------------------------------

    def _next_presence(self, ob: OwnBand, now: int) -> bool:
        if isinstance(ob.model, DiurnalModel):
            present = not is_downtime(ob.model.window, self.region, now, self.tick_seconds)
        else:
            # one draw per Markov band per tick, pinned or not, keeps the stream aligned
            u = self.rng.random()
            if ob.primary_present:
                present = not u < ob.model.p_on_to_off
            else:
                present = u < ob.model.p_off_to_on
        if now < ob.pinned_until:
            present = True
        return present

    def advance_occupancy(self, now: int) -> List[Transition]:
        """Move every own band to its state at tick ``now``."""
        if now <= self.now:
            return []
        self.now = now
        out = []
        for i, ob in enumerate(self.bands):
            if ob.state == Occupancy.LEASED_OUT and ob.lease_expires <= now:
                ob.state, ob.lease_id = Occupancy.IDLE, None
            present = self._next_presence(ob, now)
            if present and not ob.primary_present:
                out.append(self._primary_return(i))
            elif not present and ob.primary_present:
                ob.state = Occupancy.IDLE
                out.append(Transition(i, ob.band, Occupancy.IDLE))
            if ob.primary_present:
                ob.last_occupied = now
        return out

    def _primary_return(self, i: int) -> Transition:
        ob = self.bands[i]
        notice = None
        if ob.state == Occupancy.LEASED_OUT:
            notice = LeaseRevoke(ob.lease_id, self.network_id, ob.lessee, ob.band.low_hz,
                                 ob.band.high_hz, RevokeReason.PRIMARY_RETURN)
        ob.state, ob.lease_id = Occupancy.OCCUPIED, None
        return Transition(i, ob.band, Occupancy.OCCUPIED, notice)

    def handle_primary_return(self, band: FrequencyBand, now: int,
                              hold_ticks: int = 0) -> Tuple[List[Transition], List[Payload]]:
        """Force the primary user back onto ``band``, optionally pinning it there."""
        i = self.index_of(band)
        ob = self.bands[i]
        ob.pinned_until = max(ob.pinned_until, now + hold_ticks)
        ob.last_occupied = max(ob.last_occupied, now)
        if ob.primary_present:
            return [], []
        transitions = [self._primary_return(i)]
        return transitions, self.outbound(transitions, now)

    def outbound(self, transitions: List[Transition], now: int) -> List[Payload]:
        """Coordinator-bound messages for a batch of transitions."""
        if not transitions:
            return []
        msgs: List[Payload] = [t.notice for t in transitions if t.notice is not None]
        msgs.append(UcltUpdate(self.record(now)))
        return msgs

    def record(self, now: int) -> NetworkRecord:
        occupied = tuple(ob.band for ob in self.bands if ob.state == Occupancy.OCCUPIED)
        idle = [ob for ob in self.bands if ob.state != Occupancy.OCCUPIED]
        until = self.availability.until
        for ob in idle:
            if isinstance(ob.model, DiurnalModel):
                end = downtime_end(ob.model.window, self.region, now, self.tick_seconds)
                if end is not None:
                    until = min(until, end)
        if until <= max(self.availability.start, now):
            idle, until = [], self.availability.until
        return NetworkRecord(
            network_id=self.network_id,
            region_id=self.region_number,
            occupied_bands=occupied,
            idle_bands=tuple(ob.band for ob in idle),
            permissions=self.permissions,
            availability=AvailabilityWindow(self.availability.start, until),
        )

    # -- sensing ------------------------------------------------------------

    def sense(self, now: int) -> bool:
        """Take a reading if ``now`` is a sensing instant. Returns True if it did."""
        if now % self.sensing_interval:
            return False
        self.readings = [ob.primary_present for ob in self.bands]
        self.sensed_at = now
        return True

    def sense_band(self, band: FrequencyBand, now: int) -> SenseResult:
        self.sense(now)
        present = self.readings[self.index_of(band)]
        return SenseResult.PRIMARY_PRESENT if present else SenseResult.HOLE_DETECTED

    def any_hole(self) -> bool:
        return not all(self.readings)

    def wants_spectrum(self) -> bool:
        """Busy: every own band read as occupied, nothing leased in, no query pending."""
        return (self.demand is not None and not self.awaiting and not self.leased_in
                and all(self.readings))

    def query(self) -> SpectrumQuery:
        d = self.demand
        self.awaiting = True
        return SpectrumQuery(self.network_id, d.width_hz, d.min_duration, d.lease_duration, d.mode)

    # -- leases -------------------------------------------------------------

    def on_grant(self, resp: SpectrumResponse, now: int) -> Optional[LeasedIn]:
        """Start using a granted remote band. Returns None for stale grants."""
        self.awaiting = False
        if resp.expires_at <= now or resp.lease_id in self.leased_in:
            return None
        lease = LeasedIn(resp.lease_id, resp.lessor, resp.band, resp.expires_at, now)
        self.leased_in[lease.lease_id] = lease
        return lease

    def on_revoke(self, revoke: LeaseRevoke, now: int) -> Optional[LeasedIn]:
        return self.leased_in.pop(revoke.lease_id, None)

    def expire_leased_in(self, now: int) -> List[LeasedIn]:
        gone = [x for x in self.leased_in.values() if x.expires_at <= now]
        for x in gone:
            del self.leased_in[x.lease_id]
        return sorted(gone, key=lambda x: x.lease_id)

    def on_lease_grant(self, grant: LeaseGrant, now: int) -> bool:
        """Lessor side: mark the band leased out until the lease term ends.

        A grant is ignored if the primary user was seen on the band at any
        point since the coordinator could last have heard from us: the
        coordinator is bound to revoke such a lease on its own.
        """
        try:
            ob = self.bands[self.index_of(grant.band)]
        except KeyError:
            return False
        if ob.state != Occupancy.IDLE or grant.expires_at <= now:
            return False
        if ob.last_occupied >= grant.granted_at - self.uplink_delay:
            return False
        ob.state, ob.lease_id = Occupancy.LEASED_OUT, grant.lease_id
        ob.lessee, ob.lease_expires = grant.lessee, grant.expires_at
        return True
