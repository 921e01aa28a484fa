"""Minimal NDN forwarder: names, packets, CS, PIT, FIB and strategies.

Forwarders are pure state machines.  ``on_interest`` and ``on_data`` take a
packet and the current simulation time (integer ns) and return the list of
``(face, packet)`` emissions; the simulator owns the links.
"""

from __future__ import annotations

import heapq
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional, Sequence

from . import grid as _grid
from .olc import name_matches_gateway

Name = tuple  # tuple[str, ...]

SECOND = 1_000_000_000
DEFAULT_LIFETIME = SECOND


def name_from_uri(uri: str) -> Name:
    parts = tuple(p for p in uri.split("/") if p)
    if not parts:
        raise ValueError("empty name")
    return parts


def to_uri(name: Sequence[str]) -> str:
    return "/" + "/".join(name)


def is_prefix(prefix: Sequence[str], name: Sequence[str]) -> bool:
    return tuple(name[: len(prefix)]) == tuple(prefix)


class Interest:
    __slots__ = ("name", "hint", "nonce", "lifetime")

    def __init__(self, name: Name, hint: tuple = (), nonce: int = 0, lifetime: int = DEFAULT_LIFETIME):
        if lifetime <= 0:
            raise ValueError("Interest lifetime must be positive")
        self.name = name
        self.hint = hint
        self.nonce = nonce
        self.lifetime = lifetime

    def with_hint(self, hint: tuple) -> "Interest":
        return Interest(self.name, hint, self.nonce, self.lifetime)

    def __repr__(self) -> str:
        hint = ",".join(to_uri(h) for h in self.hint)
        return f"Interest({to_uri(self.name)}, hint=[{hint}], nonce={self.nonce})"


class Data:
    __slots__ = ("name", "payload", "freshness", "signature")

    def __init__(self, name: Name, payload: Any = b"", freshness: int = 0, signature: bytes = b""):
        if freshness < 0:
            raise ValueError("freshness period must be non-negative")
        self.name = name
        self.payload = payload
        self.freshness = freshness
        # Never verified; integrity is left to standard NDN signing.
        self.signature = signature

    def __repr__(self) -> str:
        return f"Data({to_uri(self.name)}, freshness={self.freshness})"


def make_link_object(name: Name, delegations: Sequence[Name], freshness: int) -> Data:
    """A Link object: Data whose payload is an ordered (delegation, preference) list."""
    if not 1 <= len(delegations) <= 2:
        raise ValueError("a Link object carries one or two delegations")
    if freshness <= 0:
        raise ValueError("Link freshness must be positive")
    payload = tuple((tuple(d), pref) for pref, d in enumerate(delegations))
    return Data(name, payload, freshness)


def link_delegations(data: Data) -> tuple[Name, ...]:
    return tuple(d for d, _ in sorted(data.payload, key=lambda dp: dp[1]))


class PitEntry:
    __slots__ = ("name", "in_faces", "expiry", "nonces", "hint", "out_faces")

    def __init__(self, name: Name, expiry: int):
        self.name = name
        self.in_faces: set[int] = set()
        self.out_faces: set[int] = set()
        self.expiry = expiry
        self.nonces: set = set()
        self.hint: tuple = ()

    def __repr__(self) -> str:
        return f"PitEntry({to_uri(self.name)}, in={sorted(self.in_faces)}, expiry={self.expiry})"


@dataclass
class CsEntry:
    data: Data
    stale_at: int


class ContentStore:
    """Bounded LRU cache; only fresh entries satisfy Interests."""

    def __init__(self, capacity: int = 10_000):
        self.capacity = capacity
        self._entries: OrderedDict[Name, CsEntry] = OrderedDict()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: Name) -> bool:
        return name in self._entries

    def insert(self, data: Data, now: int) -> None:
        if self.capacity <= 0:
            return
        entries = self._entries
        entries[data.name] = CsEntry(data, now + data.freshness)
        entries.move_to_end(data.name)
        while len(entries) > self.capacity:
            entries.popitem(last=False)

    def lookup(self, name: Name, now: int) -> Optional[Data]:
        e = self._entries.get(name)
        if e is None or now >= e.stale_at:
            return None
        self._entries.move_to_end(name)
        return e.data

    def entry(self, name: Name) -> Optional[CsEntry]:
        return self._entries.get(name)


@dataclass
class FibEntry:
    prefix: Name
    face: Optional[int]
    strategy: Any


class Fib:
    _MEMO_LIMIT = 4096

    def __init__(self):
        self._table: dict[Name, FibEntry] = {}
        self._memo: dict[Name, Optional[FibEntry]] = {}

    def insert(self, prefix: Sequence[str], face: Optional[int], strategy: Any = None) -> None:
        prefix = tuple(prefix)
        self._table[prefix] = FibEntry(prefix, face, strategy)
        self._memo.clear()

    def remove(self, prefix: Sequence[str]) -> None:
        self._table.pop(tuple(prefix), None)
        self._memo.clear()

    def lookup(self, name: Sequence[str]) -> Optional[FibEntry]:
        memo = self._memo
        try:
            return memo[name]
        except (KeyError, TypeError):
            pass
        table = self._table
        found = None
        for k in range(len(name), -1, -1):
            e = table.get(tuple(name[:k]))
            if e is not None:
                found = e
                break
        if type(name) is tuple:
            if len(memo) >= self._MEMO_LIMIT:
                memo.clear()
            memo[name] = found
        return found


TraceFn = Callable[[int, str, str, str, Any, Any], None]


class Forwarder:
    """One NDN node.  Faces are small integers local to the node."""

    def __init__(self, node_id: str, cs_capacity: int = 10_000, cache_data: bool = True,
                 trace: Optional[TraceFn] = None):
        self.node_id = node_id
        self.cs = ContentStore(cs_capacity if cache_data else 0)
        self.pit: dict[Name, PitEntry] = {}
        self.fib = Fib()
        # Names this node belongs to: hints naming it are ignored here.
        self.region: set[Name] = set()
        self.trace = trace
        self.counters: dict[str, int] = {}
        self._expiry_heap: list = []
        self._seq = 0

    def _count(self, kind: str) -> None:
        self.counters[kind] = self.counters.get(kind, 0) + 1

    def _emit_trace(self, now, kind, name, face, aux=""):
        self._count(kind)
        if self.trace is not None:
            self.trace(now, self.node_id, kind, to_uri(name), face, aux)

    def strategy_for(self, interest: Interest) -> Optional[FibEntry]:
        key = interest.name
        hint = interest.hint
        if hint and not any(h in self.region for h in hint):
            key = hint[0]
        return self.fib.lookup(key)

    def _housekeep(self, now: int) -> None:
        heap = self._expiry_heap
        pit = self.pit
        while heap and heap[0][0] < now:
            expiry, _, name = heapq.heappop(heap)
            e = pit.get(name)
            if e is not None and e.expiry == expiry:
                del pit[name]

    def _track_expiry(self, entry: PitEntry) -> None:
        self._seq += 1
        heapq.heappush(self._expiry_heap, (entry.expiry, self._seq, entry.name))

    def on_interest(self, in_face: int, interest: Interest, now: int) -> list:
        self._housekeep(now)
        name = interest.name
        data = self.cs.lookup(name, now)
        if data is not None:
            self._emit_trace(now, "cs-hit", name, in_face)
            return [(in_face, data)]

        entry = self.pit.get(name)
        if entry is not None and now <= entry.expiry:
            key = (interest.nonce, interest.hint)
            if key in entry.nonces:
                self._emit_trace(now, "drop-dup-nonce", name, in_face, interest.nonce)
                return []
            entry.nonces.add(key)
            if in_face not in entry.in_faces and interest.hint == entry.hint:
                entry.in_faces.add(in_face)
                self._emit_trace(now, "pit-aggregate", name, in_face)
                return []
            # Retransmission from a known downstream, or a new hint: forward again.
            entry.in_faces.add(in_face)
            entry.hint = interest.hint
            expiry = now + interest.lifetime
            if expiry > entry.expiry:
                entry.expiry = expiry
                self._track_expiry(entry)
        else:
            entry = PitEntry(name, now + interest.lifetime)
            entry.in_faces.add(in_face)
            entry.nonces.add((interest.nonce, interest.hint))
            entry.hint = interest.hint
            self.pit[name] = entry
            self._track_expiry(entry)

        fib_entry = self.strategy_for(interest)
        if fib_entry is None or (fib_entry.strategy is None and fib_entry.face is None):
            self._emit_trace(now, "drop-no-route", name, in_face)
            return []
        strategy = fib_entry.strategy or BEST_ROUTE
        actions = strategy.after_receive_interest(self, in_face, interest, entry, fib_entry, now)
        for face, _ in actions:
            entry.out_faces.add(face)
        return actions

    def on_data(self, in_face: int, data: Data, now: int) -> list:
        name = data.name
        entry = self.pit.get(name)
        if entry is None or now > entry.expiry:
            if entry is not None:
                del self.pit[name]
            self._emit_trace(now, "drop-unsolicited", name, in_face)
            return []
        del self.pit[name]
        self.cs.insert(data, now)
        return [(f, data) for f in sorted(entry.in_faces) if f != in_face]

    def pit_sweep(self, now: int) -> list[PitEntry]:
        """Remove and return every entry whose lifetime has run out at ``now``."""
        expired = [e for e in self.pit.values() if e.expiry <= now]
        for e in expired:
            del self.pit[e.name]
            self._emit_trace(now, "pit-expire", e.name, "", len(e.in_faces))
        return expired


class BestRoute:
    """Forward to the FIB nexthop of the matched prefix."""

    def after_receive_interest(self, fw, in_face, interest, entry, fib_entry, now):
        face = fib_entry.face
        if face is None or face == in_face:
            fw._emit_trace(now, "drop-no-route", interest.name, in_face)
            return []
        return [(face, interest)]


BEST_ROUTE = BestRoute()


class GridStrategy:
    """Satellite strategy for the constellation prefix.

    Serves every satellite delegation in the forwarding hint: the hint is
    split over the ISL faces (face id = ``grid.Direction``) and, when the
    node itself is delegated, the Interest goes down the ground face of the
    gateway named in the hint.
    """

    def __init__(self, prefix: Sequence[str], dims: _grid.GridDims):
        self.prefix = tuple(prefix)
        self.dims = dims
        self._parsed: dict[Name, Optional[_grid.GridCoord]] = {}
        self._routes: dict = {}

    def parse(self, name: Name) -> Optional[_grid.GridCoord]:
        try:
            return self._parsed[name]
        except KeyError:
            c = self._parsed[name] = _grid.parse_sat_name(name, self.prefix, self.dims)
            return c

    def route(self, here: _grid.GridCoord, hint: tuple):
        """``(splits, local, gateway)`` for a hint seen at ``here``; memoized."""
        key = (here, hint)
        r = self._routes.get(key)
        if r is not None:
            return r
        sats = []
        gateway = None
        for h in hint:
            c = self.parse(h)
            if c is not None:
                sats.append(c)
            elif gateway is None:
                gateway = h
        splits = []
        remote = tuple(sorted({c for c in sats if c != here}))
        if remote:
            subsets = _grid._plan(here, remote, self.dims)
            for h in range(4):
                if subsets[h]:
                    sub = tuple(_grid.sat_name(self.prefix, c) for c in subsets[h])
                    if gateway is not None:
                        sub += (gateway,)
                    splits.append((h, sub))
        r = self._routes[key] = (tuple(splits), here in sats, gateway, bool(sats))
        return r

    def after_receive_interest(self, fw, in_face, interest, entry, fib_entry, now):
        splits, local, gateway, any_sat = self.route(fw.coord, interest.hint)
        if not any_sat:
            return BEST_ROUTE.after_receive_interest(fw, in_face, interest, entry, fib_entry, now)
        actions = [
            (h, interest if hint == interest.hint else Interest(interest.name, hint, interest.nonce, interest.lifetime))
            for h, hint in splits
        ]
        if local:
            face = fw.ground_face_for(gateway) if gateway is not None else None
            if face is None and gateway is None and entry.out_faces:
                # Re-request for an Interest this node already sent upstream:
                # the new downstream face was appended, wait for the Data.
                fw._emit_trace(now, "pit-append", interest.name, in_face)
            elif face is None:
                fw._emit_trace(now, "drop-not-attached", interest.name, in_face,
                               to_uri(gateway) if gateway else "")
            else:
                actions.append((face, interest))
        return actions


class SatelliteForwarder(Forwarder):
    """Forwarder with a grid coordinate and ground faces keyed by gateway name."""

    def __init__(self, node_id: str, coord: _grid.GridCoord, strategy: GridStrategy, **kw):
        super().__init__(node_id, **kw)
        self.coord = coord
        self.ground_faces: dict[Name, int] = {}
        self.fib.insert(strategy.prefix, None, strategy)
        self.prefix = strategy.prefix

    def ground_face_for(self, gateway: Name) -> Optional[int]:
        face = self.ground_faces.get(gateway)
        if face is not None:
            return face
        for gw, face in self.ground_faces.items():
            if name_matches_gateway(gateway, gw, self.prefix):
                return face
        return None


def sat_names(prefix: Sequence[str], coords: Iterable[_grid.GridCoord]) -> tuple[Name, ...]:
    return tuple(_grid.sat_name(prefix, c) for c in coords)
