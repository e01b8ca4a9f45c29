"""Satellite ring, the probe/status query round, and cascading hand-over.

Satellites sit on a ring and each starts out responsible for one region.
When a busy region finds an idle one, duties shift one hop at a time along
the shorter ring path from the idle region's satellite to the busy region's
satellite: the idle region's ground network absorbs its satellite's duties,
every satellite on the path takes over its neighbour's region, and the busy
region's satellite ends up free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .link import RoutingError
from .wire import HandOverDirective, MessageKind


class CascadeError(ValueError):
    pass


@dataclass(frozen=True)
class Satellite:
    sat_id: int
    home_region: int
    ring_position: int


@dataclass(frozen=True, order=True)
class Entity:
    """Whatever currently serves a region: a satellite or a ground network."""

    kind: str
    id: int

    @classmethod
    def sat(cls, sat_id: int) -> "Entity":
        return cls("satellite", sat_id)

    @classmethod
    def ground(cls, network_id: int) -> "Entity":
        return cls("ground", network_id)


@dataclass
class _Applied:
    chain: Tuple[int, ...]
    regions: Tuple[int, ...]
    ground: int


@dataclass
class Constellation:
    satellites: Dict[int, Satellite]
    responsibility: Dict[int, Entity]
    crfc_reachable: Set[int] = field(default_factory=set)
    # freed satellite -> region it now serves as extra capacity
    attached: Dict[int, int] = field(default_factory=dict)
    history: List[_Applied] = field(default_factory=list)

    @classmethod
    def build(cls, satellites: Sequence[Satellite], crfc_reachable: Optional[Set[int]] = None):
        positions = sorted(s.ring_position for s in satellites)
        if positions != list(range(len(satellites))):
            raise CascadeError("ring positions must be a permutation of 0..N-1")
        regions = [s.home_region for s in satellites]
        if len(set(regions)) != len(regions):
            raise CascadeError("each satellite must start with its own region")
        sats = {s.sat_id: s for s in satellites}
        if len(sats) != len(satellites):
            raise CascadeError("duplicate satellite id")
        resp = {s.home_region: Entity.sat(s.sat_id) for s in satellites}
        reach = set(sats) if crfc_reachable is None else set(crfc_reachable)
        return cls(sats, resp, reach)

    @property
    def ring(self) -> List[int]:
        return [s.sat_id for s in sorted(self.satellites.values(), key=lambda s: s.ring_position)]

    @property
    def regions(self) -> List[int]:
        return sorted(self.responsibility)

    def region_of(self, sat_id: int) -> Optional[int]:
        target = Entity.sat(sat_id)
        for region, ent in self.responsibility.items():
            if ent == target:
                return region
        return None

    def satellite_for(self, region: int) -> int:
        ent = self.responsibility[region]
        if ent.kind != "satellite":
            raise CascadeError(f"region {region} is served by ground network {ent.id}")
        return ent.id

    def is_free(self, sat_id: int) -> bool:
        return self.region_of(sat_id) is None

    def check_coverage(self, regions: Optional[Sequence[int]] = None) -> None:
        """Every region has exactly one responsible entity and no entity serves two."""
        expected = set(regions) if regions is not None else {s.home_region for s in self.satellites.values()}
        if set(self.responsibility) != expected:
            raise CascadeError(f"coverage not total: {sorted(expected - set(self.responsibility))} uncovered")
        ents = list(self.responsibility.values())
        if len(set(ents)) != len(ents):
            raise CascadeError("an entity is responsible for more than one region")

    def _adjacent(self, a: int, b: int) -> bool:
        n = len(self.satellites)
        d = (self.satellites[a].ring_position - self.satellites[b].ring_position) % n
        return d in (1, n - 1)

    def validate_chain(self, chain: Sequence[int]) -> List[int]:
        """Regions currently held by each chain member, or CascadeError."""
        if len(chain) < 2:
            raise CascadeError("a chain needs at least two satellites")
        if len(set(chain)) != len(chain):
            raise CascadeError(f"chain {list(chain)} repeats a satellite")
        for s in chain:
            if s not in self.satellites:
                raise CascadeError(f"unknown satellite {s}")
        for a, b in zip(chain, chain[1:]):
            if not self._adjacent(a, b):
                raise CascadeError(f"satellites {a} and {b} are not ring-adjacent")
        regions = []
        for s in chain:
            r = self.region_of(s)
            if r is None:
                raise CascadeError(f"satellite {s} holds no region duties")
            regions.append(r)
        return regions


def compute_handover_chain(ring: Sequence[int], busy_sat: int, idle_sat: int) -> List[int]:
    """Shorter ring path from ``idle_sat`` to ``busy_sat``, both ends included.

    When both directions are equally long the path enters ``busy_sat`` from
    its successor in ring order.
    """
    if busy_sat == idle_sat:
        raise CascadeError("busy and idle satellite are the same; nothing to free")
    pos = {s: i for i, s in enumerate(ring)}
    if busy_sat not in pos or idle_sat not in pos:
        raise CascadeError("satellite not on the ring")
    n = len(ring)
    pb, pi = pos[busy_sat], pos[idle_sat]
    up = (pb - pi) % n
    down = (pi - pb) % n
    if up < down:
        return [ring[(pi + k) % n] for k in range(up + 1)]
    return [ring[(pi - k) % n] for k in range(down + 1)]


def execute_cascade(c: Constellation, chain: Sequence[int], idle_region: int,
                    ground_network: int, now: int) -> List[HandOverDirective]:
    """Shift duties along ``chain`` in place; one directive per hand-off.

    The first directive hands the idle region to its ground network; each
    following one moves a region from ``chain[k+1]`` to ``chain[k]``. The
    constellation is untouched if the chain is rejected.
    """
    regions = c.validate_chain(chain)
    if regions[0] != idle_region:
        raise CascadeError(f"satellite {chain[0]} does not serve idle region {idle_region}")
    directives = [HandOverDirective(chain[0], ground_network, regions[0], now)]
    for k in range(len(chain) - 1):
        directives.append(HandOverDirective(chain[k + 1], chain[k], regions[k + 1], now))
    c.responsibility[regions[0]] = Entity.ground(ground_network)
    for k in range(len(chain) - 1):
        c.responsibility[regions[k + 1]] = Entity.sat(chain[k])
    c.attached[chain[-1]] = regions[-1]
    c.history.append(_Applied(tuple(chain), tuple(regions), ground_network))
    return directives


def reverse_cascade(c: Constellation, now: int) -> List[HandOverDirective]:
    """Undo the most recent cascade, busy end first."""
    if not c.history:
        raise CascadeError("no cascade to reverse")
    applied = c.history.pop()
    chain, regions = applied.chain, applied.regions
    directives = []
    for k in range(len(chain) - 1, 0, -1):
        directives.append(HandOverDirective(chain[k - 1], chain[k], regions[k], now))
        c.responsibility[regions[k]] = Entity.sat(chain[k])
    directives.append(HandOverDirective(applied.ground, chain[0], regions[0], now))
    c.responsibility[regions[0]] = Entity.sat(chain[0])
    c.attached.pop(chain[-1], None)
    return directives


@dataclass(frozen=True)
class Hop:
    step: int
    kind: MessageKind
    src: int
    dst: int


@dataclass
class QuerySequence:
    hops: List[Hop]
    chosen: Optional[int]

    @property
    def kinds(self) -> List[MessageKind]:
        return [h.kind for h in self.hops]


def probed_satellites(c: Constellation) -> List[Tuple[int, int]]:
    """(satellite, region) pairs the coordinator probes, by satellite id."""
    out = []
    for region, ent in c.responsibility.items():
        if ent.kind == "satellite":
            out.append((ent.id, region))
    return sorted(out)


def choose_idle_region(statuses: Mapping[int, bool], busy_region: int) -> Optional[int]:
    for region in sorted(statuses):
        if region != busy_region and statuses[region]:
            return region
    return None


def run_query_sequence(c: Constellation, busy_region: int, busy_network: int,
                       network_of: Mapping[int, int], region_idle: Mapping[int, bool],
                       crfc: int) -> QuerySequence:
    """The eight-message query round, computed without a clock.

    ``network_of`` maps a region to its ground network, ``region_idle`` gives
    each network's answer to the probe.
    """
    busy_sat = c.satellite_for(busy_region)
    hops = [Hop(1, MessageKind.SPECTRUM_QUERY, busy_network, busy_sat)]
    if busy_sat not in c.crfc_reachable:
        raise RoutingError(f"step 2: satellite {busy_sat} cannot reach the coordinator")
    hops.append(Hop(2, MessageKind.SPECTRUM_QUERY, busy_sat, crfc))
    probed = probed_satellites(c)
    for sat, _ in probed:
        if sat not in c.crfc_reachable:
            raise RoutingError(f"step 3: coordinator cannot reach satellite {sat}")
    hops += [Hop(3, MessageKind.PROBE_REQUEST, crfc, sat) for sat, _ in probed]
    hops += [Hop(4, MessageKind.PROBE_REQUEST, sat, network_of[r]) for sat, r in probed]
    hops += [Hop(5, MessageKind.STATUS_REPORT, network_of[r], sat) for sat, r in probed]
    hops += [Hop(6, MessageKind.STATUS_REPORT, sat, crfc) for sat, _ in probed]
    hops.append(Hop(7, MessageKind.SPECTRUM_RESPONSE, crfc, busy_sat))
    hops.append(Hop(8, MessageKind.SPECTRUM_RESPONSE, busy_sat, busy_network))
    chosen = choose_idle_region({r: region_idle[r] for _, r in probed}, busy_region)
    return QuerySequence(hops, chosen)
