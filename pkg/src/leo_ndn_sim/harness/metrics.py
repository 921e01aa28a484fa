"""Handover records, loss periods and per-H summaries."""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

from .. import grid
from ..constellation import NS, Ephemeris, GroundSite
from ..grid import GridCoord, GridDims

TIMEOUT = "timeout"
RELATIVE_DISTANCE = "relative-distance"

# A loss run is attributed to the nearest producer switch within this window.
ATTRIBUTION_BEFORE = 1 * NS
ATTRIBUTION_AFTER = 3 * NS


@dataclass(frozen=True)
class HandoverRecord:
    side: str  # "producer" | "consumer"
    t_switch: int
    old_sat: GridCoord
    new_sat: GridCoord
    inter_handover_gap: int
    # One-way delay from the C-Gw to each satellite along the forwarding path.
    d_old: int = 0
    d_new: int = 0


@dataclass(frozen=True)
class LossPeriod:
    handover: int  # index into the producer-side records
    t_switch: int
    t_first_loss: int
    t_recovery: int
    cause: str
    packets_lost: int

    @property
    def length(self) -> int:
        return self.t_recovery - self.t_first_loss


@dataclass(frozen=True)
class PacketRecord:
    seq: int
    departure: int
    last_departure: int
    arrival: Optional[int]
    retransmissions: int
    answered_original: bool


def path_delay(eph: Ephemeris, dims: GridDims, site: GroundSite, entry: GridCoord, target: GridCoord,
               t: int) -> int:
    """Ground leg from ``site`` to ``entry`` plus the ISL hops the grid strategy takes to ``target``."""
    ts = t / NS
    total = eph.delay_ns(eph.site(site, ts), eph.sat(entry, ts))
    cur = entry
    while cur != target:
        subsets = grid._plan(cur, (target,), dims)
        d = next(h for h in range(4) if subsets[h])
        nxt = grid.neighbor(cur, grid.Direction(d), dims)
        total += eph.delay_ns(eph.sat(cur, ts), eph.sat(nxt, ts))
        cur = nxt
    return total


def handover_records(schedule, side: str, *, eph: Ephemeris = None, dims: GridDims = None,
                     viewer: GroundSite = None, viewer_schedule=None) -> list[HandoverRecord]:
    """One record per window boundary.  With a viewer, fill the C-Gw path delays."""
    out = []
    prev = 0
    for a, b in zip(schedule, schedule[1:]):
        t = a.t_end
        d_old = d_new = 0
        if viewer is not None:
            entry = _sat_at(viewer_schedule, t)
            d_old = path_delay(eph, dims, viewer, entry, a.sat, t)
            d_new = path_delay(eph, dims, viewer, entry, b.sat, t)
        out.append(HandoverRecord(side, t, a.sat, b.sat, t - prev, d_old, d_new))
        prev = t
    return out


def _sat_at(schedule, t: int) -> GridCoord:
    ends = [w.t_end for w in schedule]
    k = min(bisect.bisect_right(ends, t), len(schedule) - 1)
    return schedule[k].sat


def packet_records(consumer) -> list[PacketRecord]:
    return [
        PacketRecord(k, consumer.departure[k], consumer.last_departure[k], consumer.arrival[k],
                     consumer.retx[k], consumer.answered_original(k))
        for k in range(len(consumer.departure))
    ]


def classify_losses(
    packets: Sequence[PacketRecord],
    handovers: Sequence[HandoverRecord],
    timeouts: Sequence[int],
    lifetime: int,
    horizon: int,
) -> tuple[list[LossPeriod], list[tuple[int, int, int]]]:
    """Group unanswered first emissions into one period per producer handover.

    A run of consecutive lost sequence numbers starts at the departure of
    its first member and ends at the departure of the next first emission
    that was answered.  Runs are attributed to the nearest producer switch
    ``t_s`` with ``t_s - 1 s <= t_first_loss <= t_s + 3 s``.  A period is
    ``timeout`` when a link-query timeout fired inside it.

    Returns the periods and the runs that matched no handover as
    ``(t_first_loss, t_recovery, count)``.
    """
    eligible = [p for p in packets if p.departure + lifetime < horizon]
    runs = []
    k = 0
    while k < len(eligible):
        if eligible[k].answered_original:
            k += 1
            continue
        j = k
        while j < len(eligible) and not eligible[j].answered_original:
            j += 1
        t_rec = eligible[j].departure if j < len(eligible) else horizon
        runs.append((eligible[k].departure, t_rec, j - k))
        k = j

    switches = [h.t_switch for h in handovers if h.side == "producer"]
    prod_idx = [i for i, h in enumerate(handovers) if h.side == "producer"]
    grouped: dict[int, list] = {}
    orphans = []
    for t0, t1, n in runs:
        best = None
        for i, ts in zip(prod_idx, switches):
            if ts - ATTRIBUTION_BEFORE <= t0 <= ts + ATTRIBUTION_AFTER:
                if best is None or abs(t0 - ts) < abs(t0 - handovers[best].t_switch):
                    best = i
        if best is None:
            orphans.append((t0, t1, n))
        else:
            grouped.setdefault(best, []).append((t0, t1, n))

    tos = sorted(timeouts)
    periods = []
    for i in sorted(grouped):
        rs = grouped[i]
        t0 = min(r[0] for r in rs)
        t1 = max(r[1] for r in rs)
        lo = bisect.bisect_left(tos, t0)
        cause = TIMEOUT if lo < len(tos) and tos[lo] <= t1 else RELATIVE_DISTANCE
        periods.append(LossPeriod(i, handovers[i].t_switch, t0, t1, cause, sum(r[2] for r in rs)))
    return periods, orphans


@dataclass(frozen=True)
class Summary:
    H: float
    handovers: int
    lossy: int
    timeout_periods: int
    relative_distance_periods: int
    lossy_fraction: float
    timeout_fraction: float
    relative_distance_fraction: float
    mean_loss_length_s: float
    mean_gap_s: float
    loss_to_gap_ratio: float
    packets_sent: int
    packets_lost: int
    unattributed_runs: int


def summarize(H_seconds: float, handovers: Sequence[HandoverRecord], periods: Sequence[LossPeriod],
              packets: Sequence[PacketRecord], orphans: Sequence) -> Summary:
    prod = [h for h in handovers if h.side == "producer"]
    n = len(prod)
    lossy = len(periods)
    to = sum(1 for p in periods if p.cause == TIMEOUT)
    rd = lossy - to
    mean_len = sum(p.length for p in periods) / lossy / NS if lossy else 0.0
    mean_gap = sum(h.inter_handover_gap for h in prod) / n / NS if n else 0.0
    return Summary(
        H=H_seconds,
        handovers=n,
        lossy=lossy,
        timeout_periods=to,
        relative_distance_periods=rd,
        lossy_fraction=lossy / n if n else 0.0,
        timeout_fraction=to / n if n else 0.0,
        relative_distance_fraction=rd / n if n else 0.0,
        mean_loss_length_s=mean_len,
        mean_gap_s=mean_gap,
        loss_to_gap_ratio=mean_len / mean_gap if mean_gap else 0.0,
        packets_sent=len(packets),
        packets_lost=sum(p.packets_lost for p in periods),
        unattributed_runs=len(orphans),
    )


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(round(v, 9))
    if isinstance(v, tuple):
        return ".".join(str(x) for x in v)
    return str(v)


def to_csv(rows: Sequence, cls) -> str:
    """Serialize dataclass rows with a header; coordinates become ``plane.index``."""
    names = [f.name for f in fields(cls)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in rows:
        d = asdict(r)
        w.writerow([_cell(d[k]) for k in names])
    return buf.getvalue()
