"""Gateway mobility protocol: prefix registry, P-Gw Link service and
handover phases, C-Gw delegation management and consumer-side recovery.

All state machines here are driven by the caller with the current time in
integer nanoseconds and return the packets to send; none of them touches the
simulator directly.
"""

from __future__ import annotations

import bisect
import enum
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import constellation as geo
from .grid import GridCoord, sat_name
from .ndn import (
    DEFAULT_LIFETIME,
    SECOND,
    Data,
    Interest,
    Name,
    link_delegations,
    make_link_object,
)
from .olc import name_matches_gateway

ACCESS = "access"


class NoRouteError(LookupError):
    pass


class ScenarioError(ValueError):
    pass


class RegistryTable:
    """Static content-prefix to P-Gw name table (longest-prefix match)."""

    def __init__(self, entries: dict[Name, Name] | None = None):
        self._entries: dict[Name, Name] = {}
        for prefix, pgw in (entries or {}).items():
            self.add(prefix, pgw)

    def add(self, prefix: Sequence[str], pgw: Sequence[str]) -> None:
        self._entries[tuple(prefix)] = tuple(pgw)

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def lookup(self, content_name: Sequence[str]) -> Name:
        name = tuple(content_name)
        for k in range(len(name), 0, -1):
            pgw = self._entries.get(name[:k])
            if pgw is not None:
                return pgw
        raise NoRouteError(f"no gateway registered for /{'/'.join(name)}")


def registry_lookup(table: RegistryTable, content_name: Sequence[str]) -> Name:
    return table.lookup(content_name)


class Phase(enum.Enum):
    STEADY = "steady"
    HANDOVER = "handover"


@dataclass
class PhaseTransition:
    time: int
    kind: str  # "handover-start" | "switch"
    old_sat: GridCoord
    new_sat: GridCoord


class PgwState:
    """Producer gateway: Link-object service over a precomputed access schedule.

    The handover phase for the switch at ``t`` spans ``[t - H, t)``; the
    ground attachment itself moves to the next satellite exactly at ``t``.
    """

    def __init__(
        self,
        site: geo.GroundSite,
        schedule: Sequence[geo.AccessWindow],
        handover: int,
        freshness_cap: int = 30 * SECOND,
        prefix: Sequence[str] = ("sat",),
    ):
        if handover < 0:
            raise ScenarioError("handover length must be non-negative")
        if not schedule:
            raise ScenarioError("empty access schedule")
        for w in schedule:
            if not w.truncated and handover >= w.duration:
                raise ScenarioError(
                    f"handover length {handover} ns is not shorter than the window at {w.t_start} ns"
                )
        self.site = site
        self.name = tuple(site.olc_name)
        self.prefix = tuple(prefix)
        self.schedule = list(schedule)
        self.H = handover
        self.freshness_cap = freshness_cap
        self._ends = [w.t_end for w in self.schedule]
        self.phase = Phase.STEADY
        self.current_sat = self.schedule[0].sat
        self.next_sat: Optional[GridCoord] = None
        self._k = 0

    @property
    def switch_times(self) -> list[int]:
        return [w.t_end for w in self.schedule[:-1]]

    def window_index(self, now: int) -> int:
        return min(bisect.bisect_right(self._ends, now), len(self.schedule) - 1)

    def phase_at(self, now: int) -> tuple[Phase, GridCoord, Optional[GridCoord]]:
        k = self.window_index(now)
        cur = self.schedule[k].sat
        if k + 1 < len(self.schedule) and self.H > 0 and now >= self._ends[k] - self.H:
            return Phase.HANDOVER, cur, self.schedule[k + 1].sat
        return Phase.STEADY, cur, None

    def pgw_tick(self, now: int) -> list[PhaseTransition]:
        """Advance to ``now`` and report the transitions crossed on the way."""
        out = []
        while self._k + 1 < len(self.schedule):
            t_switch = self._ends[self._k]
            nxt = self.schedule[self._k + 1].sat
            if self.phase is Phase.STEADY and self.H > 0 and now >= t_switch - self.H:
                self.phase, self.next_sat = Phase.HANDOVER, nxt
                out.append(PhaseTransition(t_switch - self.H, "handover-start", self.current_sat, nxt))
                continue
            if now >= t_switch:
                out.append(PhaseTransition(t_switch, "switch", self.current_sat, nxt))
                self._k += 1
                self.phase, self.current_sat, self.next_sat = Phase.STEADY, nxt, None
                continue
            break
        return out

    def is_access_name(self, name: Sequence[str]) -> bool:
        if not name or name[-1] != ACCESS:
            return False
        return name_matches_gateway(tuple(name[:-1]), self.name, self.prefix)

    def pgw_answer_access(self, interest: Interest, now: int) -> Optional[Data]:
        if not self.is_access_name(interest.name):
            return None
        phase, cur, nxt = self.phase_at(now)
        k = self.window_index(now)
        if phase is Phase.HANDOVER:
            dels = (sat_name(self.prefix, cur), sat_name(self.prefix, nxt))
            freshness = self.H
        else:
            if k + 1 < len(self.schedule):
                remaining = self._ends[k] - self.H - now
            else:
                remaining = self.freshness_cap
            dels = (sat_name(self.prefix, cur),)
            freshness = max(1, min(remaining, self.freshness_cap))
        return make_link_object(interest.name, dels, freshness)


class CgwState:
    """Consumer gateway: which satellites to address for the remote P-Gw.

    ``cached`` holds the delegations of the last Link object and ``stale_at``
    its expiry.  While a refresh query is in flight the just-expired list
    keeps being used; without any usable list the full visible set of the
    P-Gw site is computed from the shared ephemeris.
    """

    def __init__(
        self,
        site: geo.GroundSite,
        registry: RegistryTable,
        sites: dict[Name, geo.GroundSite],
        cfg: geo.ShellConfig,
        prefix: Sequence[str] = ("sat",),
        lifetime: int = DEFAULT_LIFETIME,
        rng: Optional[random.Random] = None,
    ):
        self.site = site
        self.registry = registry
        self.sites = sites
        self.cfg = cfg
        self.prefix = tuple(prefix)
        self.lifetime = lifetime
        self.rng = rng or random.Random(0)
        self.cached: Optional[tuple[Name, ...]] = None
        self.stale_at = 0
        self.expired: Optional[tuple[Name, ...]] = None
        self.query_in_flight = False
        self.query_hint: tuple = ()
        self.timeouts = 0
        self.hint_log: list[tuple[int, str, int]] = []
        self._visible_cache: tuple[int, Name, tuple] | None = None

    def nonce(self) -> int:
        return self.rng.getrandbits(64)

    def pgw_for(self, content_name: Sequence[str]) -> Name:
        return registry_lookup(self.registry, content_name)

    def access_name(self, pgw: Name) -> Name:
        return (*pgw, ACCESS)

    def full_set(self, pgw: Name, now: int) -> tuple[Name, ...]:
        c = self._visible_cache
        if c is not None and c[0] == now and c[1] == pgw:
            return c[2]
        site = self.sites[pgw]
        coords = sorted(geo.visible_set(site, self.cfg, now / geo.NS))
        names = tuple(sat_name(self.prefix, s) for s in coords)
        self._visible_cache = (now, pgw, names)
        return names

    def link_valid(self, now: int) -> bool:
        return self.cached is not None and now < self.stale_at

    def cgw_delegations(self, pgw: Name, now: int) -> tuple[tuple[Name, ...], Optional[Interest]]:
        """Delegations for an outgoing Interest, plus a link query to issue if needed."""
        if self.link_valid(now):
            return self.cached, None
        if self.query_in_flight:
            return (self.expired or self.cached or self.full_set(pgw, now)), None
        dels = self.full_set(pgw, now)
        return dels, self._query(pgw, dels, now, "bootstrap")

    def _query(self, pgw: Name, dels: tuple, now: int, why: str) -> Interest:
        self.query_in_flight = True
        self.query_hint = dels
        self.hint_log.append((now, why, len(dels)))
        return Interest(self.access_name(pgw), (*dels, pgw), self.nonce(), self.lifetime)

    def on_link(self, data: Data, now: int) -> int:
        """Install a received Link object; returns its stale time."""
        self.cached = link_delegations(data)
        self.stale_at = now + data.freshness
        self.expired = None
        self.query_in_flight = False
        return self.stale_at

    def cgw_on_link_expired(self, pgw: Name, now: int) -> Optional[Interest]:
        if self.cached is None or now < self.stale_at or self.query_in_flight:
            return None
        self.expired, self.cached = self.cached, None
        return self._query(pgw, self.expired, now, "refresh")

    def cgw_on_timeout(self, pgw: Name, now: int) -> Interest:
        """The link query went unanswered: fall back to the full visible set."""
        self.timeouts += 1
        self.cached = None
        self.expired = None
        self.query_in_flight = False
        dels = self.full_set(pgw, now)
        return self._query(pgw, dels, now, "timeout")

    def cgw_on_handover(self, old_sat: GridCoord, new_sat: GridCoord, pending: Sequence[Interest],
                        now: int) -> list[Interest]:
        """Re-request every pending Interest through the old access satellite."""
        hint = (sat_name(self.prefix, old_sat),)
        return [Interest(i.name, hint, self.nonce(), i.lifetime) for i in pending]


class CgwStrategy:
    """C-Gw strategy: stamp the forwarding hint and send up the current ground face."""

    def __init__(self, state: CgwState, node):
        self.state = state
        self.node = node

    def after_receive_interest(self, fw, in_face, interest, entry, fib_entry, now):
        face = self.node.uplink_face
        if face is None:
            fw._emit_trace(now, "drop-no-access", interest.name, in_face)
            return []
        if interest.hint:
            return [(face, interest)]
        try:
            pgw = self.state.pgw_for(interest.name)
        except NoRouteError:
            fw._emit_trace(now, "drop-no-route", interest.name, in_face)
            return []
        dels, query = self.state.cgw_delegations(pgw, now)
        if query is not None:
            self.node.send_query(query)
        out = Interest(interest.name, (*dels, pgw), interest.nonce, interest.lifetime)
        self.node.note_hint(now, len(dels))
        return [(face, out)]


def oas_retention(sat, gateway: Name) -> Optional[int]:
    """Detach a gateway from a satellite without touching its PIT or CS.

    Pending entries whose downstream was the gateway stay until they expire,
    so Data arriving later is still cached and re-requests through other
    faces are aggregated onto them.  Returns the detached face id.
    """
    return sat.ground_faces.pop(tuple(gateway), None)
