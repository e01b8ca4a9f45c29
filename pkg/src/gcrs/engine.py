"""Deterministic discrete-event core.

Events pop in ``(at, seq)`` order, ``seq`` being assigned at enqueue time.
Each tick starts with an ``advance-occupancy`` event (coordinator lease
expiry, then every network in address order) followed by a ``sense`` event;
message deliveries and scripted actions fall wherever their sequence
numbers put them. With ``checked=True`` every module invariant is asserted
after every event.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .crfc import Coordinator, InvariantViolation
from .link import Link, LinkConfig
from .network import NetworkState, Occupancy, derive_seed
from .satellite import (CascadeError, Constellation, Satellite, compute_handover_chain,
                        execute_cascade, probed_satellites, reverse_cascade, choose_idle_region)
from .scenario import CRFC, CRFC_NODE, Directory, ScenarioConfig, ScriptedAction
from .trace import TRACE_FORMAT, Trace, summarize
from .uclt import PermissionSet
from .wire import (FrameError, HandOverDirective, LeaseGrant, LeaseRevoke, NONE_ID, Payload,
                   ProbeRequest, ResponseStatus, SpectrumQuery, SpectrumResponse, StatusReport,
                   UcltUpdate, WireMessage, decode_frame)

log = logging.getLogger(__name__)

DELIVER = "deliver-message"
ADVANCE = "advance-occupancy"
SENSE = "sense"
SCRIPTED = "scripted-action"


class SimulationError(RuntimeError):
    def __init__(self, event_index: int, message: str):
        self.event_index = event_index
        super().__init__(f"event {event_index}: {message}")


@dataclass(order=True)
class Event:
    at: int
    seq: int
    kind: str = field(compare=False)
    target: str = field(compare=False, default="*")
    data: Any = field(compare=False, default=None)


class EventQueue:
    def __init__(self):
        self._heap: List[Event] = []
        self._seq = 0

    def push(self, at: int, kind: str, target: str = "*", data: Any = None) -> Event:
        ev = Event(at, self._seq, kind, target, data)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek(self) -> Optional[Event]:
        return self._heap[0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


@dataclass
class _Round:
    """A satellite query round the coordinator is collecting answers for."""

    round_id: int
    querying_sat: int
    requester: int
    busy_region: int
    query_seq: int
    expected: int
    statuses: Dict[int, bool] = field(default_factory=dict)


class Simulation:
    def __init__(self, config: ScenarioConfig, seed: Optional[int] = None, checked: bool = True):
        self.config = config
        self.seed = config.global_seed if seed is None else seed
        self.checked = checked
        self.dir = Directory.for_config(config)
        self.now = 0
        self.queue = EventQueue()
        self.trace = Trace({"format": TRACE_FORMAT, "seed": self.seed,
                            "duration_ticks": config.duration_ticks,
                            "tick_seconds": config.tick_seconds})
        self.events_processed = 0

        self.links: Dict[frozenset, Link] = {}
        for ln in config.links:
            a, b = self.dir.nodes[ln.a], self.dir.nodes[ln.b]
            self.links[frozenset((a, b))] = Link(LinkConfig(ln.id, a, b, ln.delta_ticks))
        self._msg_seq: Dict[Tuple[int, int], int] = {}

        regions = {r.region_id: r for r in config.regions}
        self.networks: Dict[int, NetworkState] = {}
        self.network_of_region: Dict[int, int] = {}
        for nc in sorted(config.networks, key=lambda n: self.dir.nodes[n.id]):
            node = self.dir.nodes[nc.id]
            crfc_link = self.links.get(frozenset((node, CRFC_NODE)))
            self.networks[node] = NetworkState(
                node, regions[nc.region], self.dir.regions[nc.region],
                [(bc.band, bc.model) for bc in nc.bands],
                sensing_interval=nc.sensing_interval,
                rng_seed=derive_seed(self.seed, nc.id),
                permissions=PermissionSet(nc.permission_mode,
                                          frozenset(self.dir.nodes[a] for a in nc.allowed)),
                availability=nc.availability,
                demand=nc.demand,
                tick_seconds=config.tick_seconds,
                uplink_delay=crfc_link.delta if crfc_link else 0,
            )
            self.network_of_region.setdefault(self.dir.regions[nc.region], node)

        self.crfc = Coordinator(networks=set(self.networks), revoke_delay=self._delay_from_crfc)

        self.constellation: Optional[Constellation] = None
        if config.satellites:
            sats = [Satellite(self.dir.nodes[s.id], self.dir.regions[s.region], s.ring_position)
                    for s in config.satellites]
            reach = {s.sat_id for s in sats if frozenset((s.sat_id, CRFC_NODE)) in self.links}
            self.constellation = Constellation.build(sats, reach)
        self._rounds: Dict[int, _Round] = {}
        self._next_round = 1
        # (lessor, band) -> lessee currently transmitting, for the runtime double-use check
        self._on_air: Dict[Tuple[int, Tuple[int, int]], int] = {}

    # -- plumbing ----------------------------------------------------------

    def _delay_from_crfc(self, node: int) -> int:
        link = self.links.get(frozenset((CRFC_NODE, node)))
        return link.delta if link else 0

    def name(self, node: int) -> str:
        return self.dir.node_name(node)

    def _summary(self, payload: Payload) -> dict:
        return summarize(payload, self.dir.node_name, self.dir.region_name)

    def linked(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.links

    def send(self, src: int, dst: int, payload: Payload) -> Optional[WireMessage]:
        link = self.links.get(frozenset((src, dst)))
        summary = self._summary(payload)
        if link is None:
            self.trace.add(self.now, "routing-error", self.name(src), self.name(dst), summary)
            return None
        seq = self._msg_seq.get((src, dst), 0)
        self._msg_seq[(src, dst)] = seq + 1
        m = WireMessage(src, dst, seq, self.now, payload)
        at = link.transmit(m, self.now)
        summary["seq"] = seq
        self.trace.add(self.now, "send", self.name(src), self.name(dst), summary)
        self.queue.push(at, DELIVER, self.name(dst), frozenset((src, dst)))
        return m

    def _occupancy(self, net: NetworkState, band, state: Occupancy) -> None:
        self.trace.add(self.now, "occupancy", self.name(net.network_id), "",
                       {"band": [band.low_hz, band.high_hz], "state": state.value})

    def _push_to_crfc(self, net: NetworkState, payloads: List[Payload]) -> None:
        if not self.linked(net.network_id, CRFC_NODE):
            return
        for p in payloads:
            self.send(net.network_id, CRFC_NODE, p)

    def _crfc_send_revokes(self, revokes: List[LeaseRevoke]) -> None:
        for rv in revokes:
            self.send(CRFC_NODE, rv.lessee, rv)

    def _tx(self, kind: str, lessee: int, lessor: int, band, lease_id: int, reason: str = "") -> None:
        key = (lessor, (band.low_hz, band.high_hz))
        payload = {"band": [band.low_hz, band.high_hz], "lease_id": lease_id}
        if kind == "tx-start":
            if self.checked:
                for (lsr, (lo, hi)), other in self._on_air.items():
                    if lsr == lessor and other != lessee and max(lo, band.low_hz) < min(hi, band.high_hz):
                        raise InvariantViolation(
                            f"{self.name(lessee)} and {self.name(other)} both on {band} of {self.name(lessor)}")
            self._on_air[key] = lessee
        else:
            self._on_air.pop(key, None)
            payload["reason"] = reason
        self.trace.add(self.now, kind, self.name(lessee), self.name(lessor), payload)

    # -- tick phases -------------------------------------------------------

    def _start(self) -> None:
        if self.config.duration_ticks == 0:
            return
        for node, net in self.networks.items():
            for ob in net.bands:
                self._occupancy(net, ob.band, ob.state)
        for node, net in self.networks.items():
            self._push_to_crfc(net, [UcltUpdate(net.record(0))])
        for action in self.config.scripted_actions:
            if action.at < self.config.duration_ticks:
                self.queue.push(action.at, SCRIPTED, action.network or "*", action)
        self.queue.push(0, SENSE)
        if self.config.duration_ticks > 1:
            self.queue.push(1, ADVANCE)

    def _advance(self) -> None:
        t = self.now
        self._crfc_send_revokes(self.crfc.expire_leases(t))
        for node, net in self.networks.items():
            for lease in net.expire_leased_in(t):
                self._tx("tx-stop", node, lease.lessor, lease.band, lease.lease_id, "expired")
            before = {i: ob.state for i, ob in enumerate(net.bands)}
            transitions = net.advance_occupancy(t)
            for i, ob in enumerate(net.bands):
                if ob.state != before[i] and not any(tr.index == i for tr in transitions):
                    self._occupancy(net, ob.band, ob.state)
            for tr in transitions:
                self._occupancy(net, tr.band, tr.state)
            self._push_to_crfc(net, net.outbound(transitions, t))
        self.queue.push(t, SENSE)
        if t + 1 < self.config.duration_ticks:
            self.queue.push(t + 1, ADVANCE)

    def _sense(self) -> None:
        for node, net in self.networks.items():
            if net.sense(self.now) and net.wants_spectrum() and self.linked(node, CRFC_NODE):
                self.send(node, CRFC_NODE, net.query())

    def _scripted(self, action: ScriptedAction) -> None:
        t = self.now
        self.trace.add(t, "scripted", action.network or "", "",
                       {"action": action.action,
                        "band": None if action.band is None else [action.band.low_hz, action.band.high_hz]})
        if action.action == "primary-return":
            node = self.dir.nodes[action.network]
            net = self.networks[node]
            transitions, outbound = net.handle_primary_return(action.band, t, action.hold_ticks)
            for tr in transitions:
                self._occupancy(net, tr.band, tr.state)
            self._push_to_crfc(net, outbound)
        elif action.action == "query":
            node = self.dir.nodes[action.network]
            net = self.networks[node]
            if net.demand is None:
                self.trace.add(t, "query-skipped", action.network, "", {"reason": "no demand configured"})
                return
            via = action.via or ("satellite" if self.constellation else "crfc")
            if via == "satellite":
                try:
                    sat = self.constellation.satellite_for(net.region_number)
                except CascadeError as exc:
                    self.trace.add(t, "query-skipped", action.network, "", {"reason": str(exc)})
                    return
                self.send(node, sat, net.query())
            else:
                self.send(node, CRFC_NODE, net.query())
        elif action.action == "cascade-reversal":
            try:
                directives = reverse_cascade(self.constellation, t)
            except CascadeError as exc:
                self.trace.add(t, "cascade-rejected", CRFC, "", {"reason": str(exc)})
                return
            self.trace.add(t, "cascade-reversal", CRFC, "", {"directives": len(directives)})
            self._send_directives(directives)

    # -- message handling --------------------------------------------------

    def _deliver(self, key: frozenset) -> None:
        frame = self.links[key].deliver(self.now)
        try:
            m = decode_frame(frame)
        except FrameError as exc:
            self.trace.add(self.now, "decode-error", "", "", {"error": type(exc).__name__, "detail": str(exc)})
            return
        summary = self._summary(m.payload)
        summary["seq"] = m.seq
        summary["sent_at"] = m.sent_at
        self.trace.add(self.now, "deliver", self.name(m.src), self.name(m.dst), summary)
        if m.dst == CRFC_NODE:
            self._at_crfc(m)
        elif m.dst in self.networks:
            self._at_network(self.networks[m.dst], m)
        else:
            self._at_satellite(m.dst, m)

    def _at_crfc(self, m: WireMessage) -> None:
        t, p = self.now, m.payload
        self._crfc_send_revokes(self.crfc.expire_leases(t))
        if isinstance(p, UcltUpdate):
            self._crfc_send_revokes(self.crfc.apply_update(p.record, t))
        elif isinstance(p, LeaseRevoke):
            self._crfc_send_revokes(self.crfc.revoke_on_primary_return(m.src, p.band, t))
        elif isinstance(p, SpectrumQuery):
            if m.src in self.networks:
                self.crfc.uclt.purge_expired(t)
                result = self.crfc.handle_query(p, t, m.seq)
                self.send(CRFC_NODE, m.src, result.response)
                if result.lease is not None:
                    self.send(CRFC_NODE, result.lease.lessor, result.lease.as_grant())
            else:
                self._open_round(m)
        elif isinstance(p, StatusReport):
            self._collect_status(p)
        else:
            log.debug("coordinator ignores %s from %s", type(p).__name__, self.name(m.src))

    def _open_round(self, m: WireMessage) -> None:
        q: SpectrumQuery = m.payload
        c = self.constellation
        busy = self.networks[q.requester].region_number if q.requester in self.networks else NONE_ID
        probed = probed_satellites(c)
        rnd = _Round(self._next_round, m.src, q.requester, busy, m.seq, len(probed))
        self._next_round += 1
        self._rounds[rnd.round_id] = rnd
        for sat, region in probed:
            self.send(CRFC_NODE, sat, ProbeRequest(q.requester, region, rnd.round_id))

    def _collect_status(self, s: StatusReport) -> None:
        rnd = self._rounds.get(s.query_seq)
        if rnd is None:
            return
        rnd.statuses[s.region] = s.idle
        if len(rnd.statuses) < rnd.expected:
            return
        del self._rounds[rnd.round_id]
        chosen = choose_idle_region(rnd.statuses, rnd.busy_region)
        if chosen is None:
            resp = SpectrumResponse(rnd.requester, rnd.query_seq, ResponseStatus.NO_SPECTRUM)
        else:
            resp = SpectrumResponse(rnd.requester, rnd.query_seq, ResponseStatus.IDLE_REGION_FOUND,
                                    idle_region=chosen)
        self.send(CRFC_NODE, rnd.querying_sat, resp)

    def _at_satellite(self, sat: int, m: WireMessage) -> None:
        p = m.payload
        if isinstance(p, SpectrumQuery) and m.src in self.networks:
            self.send(sat, CRFC_NODE, p)
        elif isinstance(p, ProbeRequest) and m.src == CRFC_NODE:
            region = self.constellation.region_of(sat)
            target = self.network_of_region.get(region if region is not None else p.region)
            if target is not None:
                self.send(sat, target, ProbeRequest(p.requester, p.region, p.query_seq))
        elif isinstance(p, StatusReport) and m.src in self.networks:
            self.send(sat, CRFC_NODE, p)
        elif isinstance(p, SpectrumResponse) and m.src == CRFC_NODE:
            self.send(sat, p.requester, p)
        else:
            log.debug("satellite %s ignores %s", self.name(sat), type(p).__name__)

    def _at_network(self, net: NetworkState, m: WireMessage) -> None:
        t, p = self.now, m.payload
        node = net.network_id
        if isinstance(p, SpectrumResponse):
            net.awaiting = False
            if p.status == ResponseStatus.GRANTED:
                lease = net.on_grant(p, t)
                if lease is not None:
                    self._tx("tx-start", node, lease.lessor, lease.band, lease.lease_id)
            elif p.status == ResponseStatus.IDLE_REGION_FOUND:
                self._cascade(net, p.idle_region)
        elif isinstance(p, LeaseRevoke):
            lease = net.on_revoke(p, t)
            if lease is not None:
                self._tx("tx-stop", node, lease.lessor, lease.band, lease.lease_id, "revoked")
        elif isinstance(p, LeaseGrant):
            if net.on_lease_grant(p, t):
                self._occupancy(net, p.band, Occupancy.LEASED_OUT)
        elif isinstance(p, ProbeRequest):
            net.sense(t)
            self.send(node, m.src, StatusReport(net.region_number, node, net.any_hole(), p.query_seq))

    def _cascade(self, busy_net: NetworkState, idle_region: int) -> None:
        c = self.constellation
        try:
            busy_sat = c.satellite_for(busy_net.region_number)
            idle_sat = c.satellite_for(idle_region)
            chain = compute_handover_chain(c.ring, busy_sat, idle_sat)
            ground = self.network_of_region[idle_region]
            directives = execute_cascade(c, chain, idle_region, ground, self.now)
        except CascadeError as exc:
            self.trace.add(self.now, "cascade-rejected", CRFC, "", {"reason": str(exc)})
            return
        self.trace.add(self.now, "cascade", CRFC, self.name(busy_sat),
                       {"chain": [self.name(s) for s in chain],
                        "freed": self.name(busy_sat),
                        "busy_region": self.dir.region_name(busy_net.region_number),
                        "idle_region": self.dir.region_name(idle_region)})
        self._send_directives(directives)

    def _send_directives(self, directives: List[HandOverDirective]) -> None:
        sats = self.constellation.satellites
        for d in directives:
            dst = d.from_sat if d.from_sat in sats else d.to_entity
            self.send(CRFC_NODE, dst, d)

    # -- invariants --------------------------------------------------------

    def check_invariants(self) -> None:
        self.crfc.check_invariants()
        if self.constellation is not None:
            self.constellation.check_coverage()
        for net in self.networks.values():
            for ob in net.bands:
                if (ob.state == Occupancy.LEASED_OUT and ob.lease_expires > self.now
                        and ob.lease_id not in self.crfc.leases):
                    raise InvariantViolation(
                        f"{self.name(net.network_id)} holds {ob.band} leased out under "
                        f"lease {ob.lease_id} unknown to the coordinator")

    # -- driver ------------------------------------------------------------

    def run(self) -> Trace:
        self._start()
        end = self.config.duration_ticks
        while self.queue:
            ev = self.queue.peek()
            if ev.at >= end:
                break
            self.queue.pop()
            if ev.at < self.now:
                raise SimulationError(self.events_processed, f"event at {ev.at} after clock {self.now}")
            self.now = ev.at
            try:
                if ev.kind == DELIVER:
                    self._deliver(ev.data)
                elif ev.kind == ADVANCE:
                    self._advance()
                elif ev.kind == SENSE:
                    self._sense()
                elif ev.kind == SCRIPTED:
                    self._scripted(ev.data)
                if self.checked:
                    self.check_invariants()
            except (InvariantViolation, CascadeError) as exc:
                raise SimulationError(self.events_processed, str(exc)) from exc
            self.events_processed += 1
        if not self.checked:
            try:
                self.check_invariants()
            except (InvariantViolation, CascadeError) as exc:
                raise SimulationError(self.events_processed, str(exc)) from exc
        return self.trace


def run_simulation(config: ScenarioConfig, seed: Optional[int] = None, checked: bool = True):
    """Run ``config`` to completion. Returns ``(trace, metrics)``."""
    from .metrics import compute_metrics

    sim = Simulation(config, seed=seed, checked=checked)
    trace = sim.run()
    return trace, compute_metrics(trace, config)
