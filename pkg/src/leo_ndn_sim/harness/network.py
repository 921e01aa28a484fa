"""Node graph of one scenario: satellites, both gateways and their apps.

Satellite faces 0-3 are the ISLs (numbered as ``grid.Direction``); ground
faces are allocated from 4 upward, one per attachment.  Gateway faces 0
and 1 are local (application and control); ground faces start at 2.

A ground link belongs to one attachment.  When the attachment ends the
satellite side stops transmitting, so Data the satellite would still send
to the departed gateway is lost there, while packets already in flight and
anything the gateway sends are still delivered.
"""

from __future__ import annotations

import random
from collections import Counter
from typing import Optional

from .. import grid
from ..constellation import NS, Ephemeris, access_schedule
from ..grid import Direction, GridCoord
from ..mobility import CgwState, CgwStrategy, PgwState, oas_retention
from ..ndn import (
    Data,
    Forwarder,
    GridStrategy,
    Interest,
    SatelliteForwarder,
    to_uri,
)
from ..simcore import Link, Simulator, Trace
from .scenario import Scenario

APP, CTRL = 0, 1
FIRST_SAT_GROUND_FACE = 4
FIRST_GW_GROUND_FACE = 2

PROTOCOL_EVENTS = frozenset({
    "attach", "detach", "handover-start", "pgw-switch", "cgw-switch", "cgw-retransmit",
    "link-query", "link-served", "link-received", "cgw-timeout", "consumer-retransmit",
})


class LocalFace:
    """In-node face to an application; delivery happens at the same instant."""

    def __init__(self, sim: Simulator, handler):
        self.sim = sim
        self.handler = handler

    def transmit(self, src, packet, size_bytes, now):
        self.sim.schedule(now, self.handler, packet)
        return now


class Node:
    def __init__(self, net: "Network", fw: Forwarder):
        self.net = net
        self.fw = fw
        self.faces: dict[int, object] = {}

    def receive(self, face: int, packet) -> None:
        now = self.net.sim.now
        if type(packet) is Interest:
            actions = self.fw.on_interest(face, packet, now)
        else:
            actions = self.fw.on_data(face, packet, now)
        if actions:
            self.send_all(actions, now)

    def send_all(self, actions, now: int) -> None:
        isize, dsize = self.net.interest_size, self.net.data_size
        faces = self.faces
        for face, pkt in actions:
            faces[face].transmit(self, pkt, isize if type(pkt) is Interest else dsize, now)


class SatNode(Node):
    def __init__(self, net, coord: GridCoord, strategy: GridStrategy):
        sc = net.scenario
        fw = SatelliteForwarder(f"sat-{coord[0]}-{coord[1]}", coord, strategy,
                                cs_capacity=sc.cs_capacity, cache_data=sc.cache_data, trace=net.trace)
        super().__init__(net, fw)
        self.coord = coord
        self.next_face = FIRST_SAT_GROUND_FACE


class GatewayNode(Node):
    def __init__(self, net, node_id: str, name: tuple):
        sc = net.scenario
        super().__init__(net, Forwarder(node_id, cs_capacity=sc.cs_capacity, cache_data=sc.cache_data,
                                        trace=net.trace))
        self.name = name
        self.fw.region = {name}
        self.next_face = FIRST_GW_GROUND_FACE
        self.uplink_face: Optional[int] = None
        self.uplink: Optional[Link] = None
        self.access_sat: Optional[SatNode] = None


class PgwNode(GatewayNode):
    def __init__(self, net, state: PgwState):
        super().__init__(net, "pgw", state.name)
        self.state = state
        sc = net.scenario
        for prefix, _ in sc.registry.items():
            self.fw.fib.insert(prefix, APP)
        self.fw.fib.insert(state.name, CTRL)
        self.producer = ProducerApp(self, sc.data_freshness)
        self.faces[APP] = LocalFace(net.sim, self.producer.on_interest)
        self.faces[CTRL] = LocalFace(net.sim, self._on_access_query)

    def _on_access_query(self, interest: Interest) -> None:
        now = self.net.sim.now
        link = self.state.pgw_answer_access(interest, now)
        if link is None:
            return
        self.net.trace(now, "pgw", "link-served", to_uri(link.name), CTRL,
                       f"{len(link.payload)}:{link.freshness}")
        self.receive(CTRL, link)

    def tick(self) -> None:
        now = self.net.sim.now
        for tr in self.state.pgw_tick(now):
            kind = "handover-start" if tr.kind == "handover-start" else "pgw-switch"
            self.net.trace(tr.time, "pgw", kind, to_uri(self.name), "",
                           f"{tr.old_sat[0]}.{tr.old_sat[1]}>{tr.new_sat[0]}.{tr.new_sat[1]}")


class CgwNode(GatewayNode):
    def __init__(self, net, state: CgwState):
        super().__init__(net, "cgw", tuple(state.site.olc_name))
        self.state = state
        sc = net.scenario
        self.pgw = sc.producer.olc_name
        strategy = CgwStrategy(state, self)
        for prefix, _ in sc.registry.items():
            self.fw.fib.insert(prefix, None, strategy)
        self.fw.fib.insert(sc.prefix, None, strategy)
        self.faces[CTRL] = LocalFace(net.sim, self._on_link)
        self.query_nonce: Optional[int] = None
        self.hint_sizes: Counter = Counter()
        self.retransmitted = 0
        # name -> (arrival time, face) of Data for Interests re-requested at a handover
        self.recovering: set = set()
        self.recovery_arrivals: dict = {}

    def receive(self, face: int, packet) -> None:
        if self.recovering and type(packet) is Data and packet.name in self.recovering:
            self.recovering.discard(packet.name)
            self.recovery_arrivals[packet.name] = (self.net.sim.now, face)
        super().receive(face, packet)

    def attach_app(self, consumer: "ConsumerApp") -> None:
        self.faces[APP] = LocalFace(self.net.sim, consumer.on_data)

    def note_hint(self, now: int, size: int) -> None:
        self.hint_sizes[size] += 1

    def send_query(self, query: Interest) -> None:
        sim = self.net.sim
        self.query_nonce = query.nonce
        self.net.trace(sim.now, "cgw", "link-query", to_uri(query.name), CTRL, len(query.hint) - 1)
        sim.schedule(sim.now, self.receive, CTRL, query)
        sim.schedule(sim.now + query.lifetime + 1, self._query_deadline, query.nonce)

    def _on_link(self, data: Data) -> None:
        now = self.net.sim.now
        stale_at = self.state.on_link(data, now)
        self.query_nonce = None
        self.net.trace(now, "cgw", "link-received", to_uri(data.name), CTRL,
                       "|".join(f"{d[-2]}.{d[-1]}" for d, _ in data.payload))
        self.net.sim.schedule(stale_at, self._link_expiry)

    def _link_expiry(self) -> None:
        q = self.state.cgw_on_link_expired(self.pgw, self.net.sim.now)
        if q is not None:
            self.send_query(q)

    def _query_deadline(self, nonce: int) -> None:
        if not self.state.query_in_flight or self.query_nonce != nonce:
            return
        now = self.net.sim.now
        q = self.state.cgw_on_timeout(self.pgw, now)
        self.net.trace(now, "cgw", "cgw-timeout", to_uri(q.name), "", len(q.hint) - 1)
        self.send_query(q)

    def pending_interests(self, now: int) -> list[Interest]:
        """Live application Interests, the mirror of the local PIT."""
        out = []
        for name in sorted(self.fw.pit):
            e = self.fw.pit[name]
            if APP in e.in_faces and e.expiry >= now:
                out.append(Interest(name, (), 0, max(1, e.expiry - now)))
        return out

    def on_own_handover(self, old: GridCoord, new: GridCoord) -> None:
        sim = self.net.sim
        now = sim.now
        pending = self.pending_interests(now)
        retx = self.state.cgw_on_handover(old, new, pending, now)
        self.net.trace(now, "cgw", "cgw-switch", to_uri(self.name), self.uplink_face,
                       f"{old[0]}.{old[1]}>{new[0]}.{new[1]}:{len(retx)}")
        self.recovering.update(i.name for i in retx)
        pacing = self.net.scenario.pacing
        for k, interest in enumerate(retx):
            sim.schedule(now + k * pacing, self._send_recovery, interest)
        self.retransmitted += len(retx)

    def _send_recovery(self, interest: Interest) -> None:
        now = self.net.sim.now
        if self.uplink is None:
            return
        self.net.trace(now, "cgw", "cgw-retransmit", to_uri(interest.name), self.uplink_face,
                       to_uri(interest.hint[0]))
        self.uplink.transmit(self, interest, self.net.interest_size, now)


class ProducerApp:
    """Answers every Interest under the registered prefixes."""

    def __init__(self, node: PgwNode, freshness: int):
        self.node = node
        self.freshness = freshness
        self.served = 0

    def on_interest(self, interest: Interest) -> None:
        self.served += 1
        self.node.receive(APP, Data(interest.name, b"", self.freshness))


class ConsumerApp:
    """Constant-rate consumer.  Sequence ``k`` leaves at ``start + k / rate``.

    An Interest left unanswered for its lifetime is re-expressed with a new
    nonce, up to ``max_retx`` times.
    """

    def __init__(self, net: "Network", cgw: CgwNode, max_retx: int = 5):
        sc = net.scenario
        self.net = net
        self.cgw = cgw
        self.prefix = sc.traffic_prefix
        self.rate = sc.rate
        self.start = sc.traffic_start
        self.stop = sc.traffic_stop
        self.lifetime = sc.timeout
        self.max_retx = max_retx
        self.rng = net.rng
        self.departure: list[int] = []
        self.last_departure: list[int] = []
        self.arrival: list[Optional[int]] = []
        self.retx: list[int] = []
        self.answered_at_retx: list[int] = []
        self.duplicates = 0

    def emission_time(self, seq: int) -> int:
        return self.start + int(round(seq * NS / self.rate))

    def begin(self) -> None:
        if self.emission_time(0) < self.stop:
            self.net.sim.schedule(self.emission_time(0), self._emit, 0)

    def _emit(self, seq: int) -> None:
        sim = self.net.sim
        now = sim.now
        nxt = self.emission_time(seq + 1)
        if nxt < self.stop:
            sim.schedule(nxt, self._emit, seq + 1)
        self.departure.append(now)
        self.last_departure.append(now)
        self.arrival.append(None)
        self.retx.append(0)
        self.answered_at_retx.append(-1)
        self._express(seq, now)

    def _express(self, seq: int, now: int) -> None:
        name = (*self.prefix, str(seq))
        self.cgw.receive(APP, Interest(name, (), self.rng.getrandbits(64), self.lifetime))
        self.net.sim.schedule(now + self.lifetime + 1, self._deadline, seq, self.retx[seq])

    def _deadline(self, seq: int, attempt: int) -> None:
        if self.arrival[seq] is not None or self.retx[seq] != attempt or attempt >= self.max_retx:
            return
        now = self.net.sim.now
        self.retx[seq] += 1
        self.last_departure[seq] = now
        self.net.trace(now, "consumer", "consumer-retransmit", f"{to_uri(self.prefix)}/{seq}", APP,
                       self.retx[seq])
        self._express(seq, now)

    def on_data(self, data: Data) -> None:
        try:
            seq = int(data.name[-1])
        except ValueError:
            return
        if seq < len(self.arrival) and self.arrival[seq] is None:
            self.arrival[seq] = self.net.sim.now
            self.answered_at_retx[seq] = self.retx[seq]
        else:
            self.duplicates += 1

    def answered_original(self, seq: int) -> bool:
        """True when the first emission of ``seq`` got its Data."""
        return self.arrival[seq] is not None and self.answered_at_retx[seq] == 0


class Network:
    """Builds every node and link of a scenario and schedules the mobility events."""

    def __init__(self, scenario: Scenario, trace: Optional[Trace] = None, schedules=None):
        sc = scenario
        self.scenario = sc
        self.sim = Simulator()
        self.trace = trace if trace is not None else Trace(kinds=set(PROTOCOL_EVENTS))
        self.rng = random.Random(sc.seed)
        self.eph = Ephemeris(sc.shell)
        self.dims = sc.shell.dims
        self.interest_size = sc.interest_size
        self.data_size = sc.data_size

        if schedules is None:
            schedules = (
                access_schedule(sc.producer, sc.shell, sc.duration, sc.policy),
                access_schedule(sc.consumer, sc.shell, sc.duration, sc.policy),
            )
        self.pgw_schedule, self.cgw_schedule = schedules

        strategy = GridStrategy(sc.prefix, self.dims)
        self.sats = {c: SatNode(self, c, strategy) for c in self.dims.coords()}
        self._build_isls()

        self.pgw_state = PgwState(sc.producer, self.pgw_schedule, sc.handover, sc.freshness_cap, sc.prefix)
        self.cgw_state = CgwState(sc.consumer, sc.registry, {sc.producer.olc_name: sc.producer}, sc.shell,
                                  sc.prefix, sc.timeout, random.Random(self.rng.getrandbits(64)))
        self.pgw = PgwNode(self, self.pgw_state)
        self.cgw = CgwNode(self, self.cgw_state)
        self.consumer = ConsumerApp(self, self.cgw)
        self.cgw.attach_app(self.consumer)

        self._schedule_attachments(self.pgw, self.pgw_schedule, consumer_side=False)
        self._schedule_attachments(self.cgw, self.cgw_schedule, consumer_side=True)
        for t in self.pgw_state.switch_times:
            if self.pgw_state.H > 0:
                self.sim.schedule(max(0, t - self.pgw_state.H), self.pgw.tick)
            self.sim.schedule(t, self.pgw.tick)
        self.consumer.begin()

    def _on_drop(self, now, src, packet, why) -> None:
        self.trace(now, src.fw.node_id, "link-drop", to_uri(packet.name), "", why)

    def _build_isls(self) -> None:
        eph, dims, rate = self.eph, self.dims, self.scenario.isl_rate
        for c, node in self.sats.items():
            for d, back in ((Direction.FORE, Direction.AFT), (Direction.STARBOARD, Direction.PORT)):
                peer = self.sats[grid.neighbor(c, d, dims)]
                if d == Direction.FORE:
                    # Same orbit, fixed phase difference: constant length.
                    delay = eph.delay_ns(eph.sat(c, 0.0), eph.sat(peer.coord, 0.0))
                else:
                    delay = eph.isl_delay_fn(c, peer.coord)
                link = Link(self.sim, node, int(d), peer, int(back), delay, rate, on_drop=self._on_drop)
                node.faces[int(d)] = link
                peer.faces[int(back)] = link

    def ground_delay(self, site, coord: GridCoord):
        eph = self.eph

        def delay(now: int) -> int:
            t = now / NS
            return eph.delay_ns(eph.site(site, t), eph.sat(coord, t))

        return delay

    def _schedule_attachments(self, gw: GatewayNode, schedule, consumer_side: bool) -> None:
        sim = self.sim
        for k, w in enumerate(schedule):
            prev = schedule[k - 1].sat if k > 0 and schedule[k - 1].t_end == w.t_start else None
            sim.schedule(w.t_start, self._attach, gw, w.sat, prev if consumer_side else None)
            if not w.truncated:
                sim.schedule(w.t_end, self._detach, gw, w.sat)

    def _attach(self, gw: GatewayNode, coord: GridCoord, previous: Optional[GridCoord]) -> None:
        now = self.sim.now
        sat = self.sats[coord]
        site = self.scenario.producer if gw is self.pgw else self.scenario.consumer
        gface, sface = gw.next_face, sat.next_face
        gw.next_face += 1
        sat.next_face += 1
        link = Link(self.sim, gw, gface, sat, sface, self.ground_delay(site, coord), self.scenario.ground_rate,
                    deliver_in_flight=True, on_drop=self._on_drop)
        gw.faces[gface] = link
        sat.faces[sface] = link
        sat.fw.ground_faces[gw.name] = sface
        gw.uplink_face, gw.uplink, gw.access_sat = gface, link, sat
        self.trace(now, gw.fw.node_id, "attach", sat.fw.node_id, gface, sface)
        if previous is not None:
            self.cgw.on_own_handover(previous, coord)

    def _detach(self, gw: GatewayNode, coord: GridCoord) -> None:
        now = self.sim.now
        sat = self.sats[coord]
        face = oas_retention(sat.fw, gw.name)
        if face is not None:
            sat.faces[face].set_up(sat, False)
        if gw.access_sat is sat:
            gw.uplink_face, gw.uplink, gw.access_sat = None, None, None
        self.trace(now, gw.fw.node_id, "detach", sat.fw.node_id, face if face is not None else "", "")

    def run(self) -> int:
        return self.sim.run_until(self.scenario.duration)

