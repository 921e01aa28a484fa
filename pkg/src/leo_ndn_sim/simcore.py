"""Deterministic discrete-event engine and the link model.

Time is an integer number of nanoseconds.  Events are ordered by
``(time, seq)`` where ``seq`` is the insertion counter, so equal-time events
run in the order they were scheduled.
"""

from __future__ import annotations

import heapq
import io
from typing import Any, Callable, Optional, TextIO

NS_PER_S = 1_000_000_000
INF_RATE = float("inf")


class SchedulingError(AssertionError):
    pass


class Simulator:
    def __init__(self):
        self.now = 0
        self._queue: list = []
        self._seq = 0
        self.executed = 0

    def schedule(self, time: int, fn: Callable, *args) -> None:
        if time < self.now:
            raise SchedulingError(f"event at {time} scheduled in the past (now={self.now})")
        self._seq += 1
        heapq.heappush(self._queue, (time, self._seq, fn, args))

    def schedule_in(self, delay: int, fn: Callable, *args) -> None:
        self.schedule(self.now + delay, fn, *args)

    def run_until(self, t_end: int) -> int:
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before now={self.now}")
        queue = self._queue
        pop = heapq.heappop
        count = 0
        while queue and queue[0][0] <= t_end:
            time, _, fn, args = pop(queue)
            self.now = time
            fn(*args)
            count += 1
        self.now = t_end
        self.executed += count
        return count

    def __len__(self) -> int:
        return len(self._queue)


class Trace:
    """Line-oriented trace: ``time_ns,node_id,event_kind,name,face,aux``.

    ``kinds`` restricts which event kinds are kept (None keeps all).  Records
    go to ``stream`` when given and are also retained in memory when
    ``keep`` is set.
    """

    HEADER = "time_ns,node_id,event_kind,name,face,aux"

    def __init__(self, stream: Optional[TextIO] = None, kinds: Optional[set] = None, keep: bool = True):
        self.stream = stream
        self.kinds = kinds
        self.keep = keep
        self.records: list[tuple] = []
        if stream is not None:
            stream.write(self.HEADER + "\n")

    def __call__(self, time: int, node: str, kind: str, name: str, face: Any = "", aux: Any = "") -> None:
        if self.kinds is not None and kind not in self.kinds:
            return
        rec = (time, node, kind, name, face, aux)
        if self.keep:
            self.records.append(rec)
        if self.stream is not None:
            self.stream.write(f"{time},{node},{kind},{name},{face},{aux}\n")

    def of_kind(self, *kinds: str) -> list[tuple]:
        return [r for r in self.records if r[2] in kinds]


class LinkEnd:
    """One direction of a link: the transmitter's queue toward ``dst``."""

    __slots__ = ("dst_node", "dst_face", "busy_until", "last_arrival", "up")

    def __init__(self, dst_node, dst_face):
        self.dst_node = dst_node
        self.dst_face = dst_face
        self.busy_until = 0
        self.last_arrival = 0
        self.up = True


class Link:
    """Point-to-point link with FIFO serialization and a delay model.

    ``delay`` is either a fixed number of ns or a callable ``f(now_ns) -> ns``
    evaluated at each emission.  ``rate`` is in bits/s.  A packet emitted on
    a direction that is down is dropped; a packet whose receiving end went
    down while it was in flight is dropped on arrival unless the link was
    created with ``deliver_in_flight``.
    """

    def __init__(self, sim: Simulator, a, a_face, b, b_face, delay, rate: float = 1e9,
                 deliver_in_flight: bool = False, on_drop: Optional[Callable] = None):
        self.sim = sim
        self.ends = {a: LinkEnd(b, b_face), b: LinkEnd(a, a_face)}
        self.faces = {a: a_face, b: b_face}
        self.delay = delay
        self.rate = rate
        self.deliver_in_flight = deliver_in_flight
        self.on_drop = on_drop

    def end_from(self, node) -> LinkEnd:
        return self.ends[node]

    def set_up(self, node, up: bool) -> None:
        """Enable or disable transmission from ``node``."""
        self.ends[node].up = up

    def propagation(self, now: int) -> int:
        d = self.delay
        return d(now) if callable(d) else d

    def transmit(self, src, packet, size_bytes: int, now: int) -> Optional[int]:
        """Schedule delivery of ``packet``; returns the arrival time or None if dropped."""
        end = self.ends[src]
        if not end.up:
            if self.on_drop is not None:
                self.on_drop(now, src, packet, "link-down")
            return None
        start = end.busy_until if end.busy_until > now else now
        tx = 0 if self.rate == INF_RATE else int(round(size_bytes * 8 * NS_PER_S / self.rate))
        end.busy_until = start + tx
        arrival = start + tx + self.propagation(now)
        if arrival < end.last_arrival:
            arrival = end.last_arrival
        end.last_arrival = arrival
        self.sim.schedule(arrival, self._arrive, src, end, packet)
        return arrival

    def _arrive(self, src, end: LinkEnd, packet) -> None:
        back = self.ends[end.dst_node]
        if not back.up and not self.deliver_in_flight:
            if self.on_drop is not None:
                self.on_drop(self.sim.now, end.dst_node, packet, "face-down-arrival")
            return
        end.dst_node.receive(end.dst_face, packet)
