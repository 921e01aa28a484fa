"""Scenario runs: single run, H sweep and the consumer handover trace.

Output files of :func:`run_scenario` (all CSV with a header line):

``trace.csv``
    ``time_ns,node_id,event_kind,name,face,aux``; protocol events only
    unless ``output.trace_kinds`` is ``"all"`` or an explicit list.
``handovers.csv``
    ``side,t_switch,old_sat,new_sat,inter_handover_gap,d_old,d_new``;
    times in ns, satellites as ``plane.index``.  ``d_old``/``d_new`` are
    the one-way C-Gw path delays to the old and new P-Gw satellites.
``loss_periods.csv``
    ``handover,t_switch,t_first_loss,t_recovery,cause,packets_lost``.
``packets.csv``
    ``seq,departure,last_departure,arrival,retransmissions,answered_original``.
``summary.csv``
    One :class:`~leo_ndn_sim.harness.metrics.Summary` row.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ..constellation import NS, access_schedule
from ..simcore import Trace
from . import metrics as M
from .network import PROTOCOL_EVENTS, Network
from .scenario import DEFAULT_H_GRID, Scenario


@dataclass
class RunResult:
    scenario: Scenario
    handovers: list[M.HandoverRecord]
    periods: list[M.LossPeriod]
    orphans: list
    packets: list[M.PacketRecord]
    summary: M.Summary
    trace_text: str
    network: Network = field(repr=False)

    def files(self) -> dict[str, str]:
        return {
            "trace.csv": self.trace_text,
            "handovers.csv": M.to_csv(self.handovers, M.HandoverRecord),
            "loss_periods.csv": M.to_csv(self.periods, M.LossPeriod),
            "packets.csv": M.to_csv(self.packets, M.PacketRecord),
            "summary.csv": M.to_csv([self.summary], M.Summary),
        }

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files().items():
            (out / name).write_text(text)


def _trace_kinds(spec):
    if spec == "all":
        return None
    if spec == "protocol":
        return set(PROTOCOL_EVENTS)
    return set(spec)


def schedules_for(sc: Scenario):
    return (
        access_schedule(sc.producer, sc.shell, sc.duration, sc.policy),
        access_schedule(sc.consumer, sc.shell, sc.duration, sc.policy),
    )


def run_scenario(sc: Scenario, out_dir: Optional[str | Path] = None, schedules=None) -> RunResult:
    buf = io.StringIO()
    trace = Trace(buf, kinds=_trace_kinds(sc.trace_kinds), keep=True)
    net = Network(sc, trace, schedules)
    net.run()
    handovers = M.handover_records(net.pgw_schedule, "producer", eph=net.eph, dims=net.dims,
                                   viewer=sc.consumer, viewer_schedule=net.cgw_schedule)
    handovers += M.handover_records(net.cgw_schedule, "consumer")
    handovers.sort(key=lambda h: (h.t_switch, h.side))
    packets = M.packet_records(net.consumer)
    timeouts = [r[0] for r in trace.records if r[2] == "cgw-timeout"]
    periods, orphans = M.classify_losses(packets, handovers, timeouts, sc.timeout, sc.duration)
    summary = M.summarize(sc.handover / NS, handovers, periods, packets, orphans)
    result = RunResult(sc, handovers, periods, orphans, packets, summary, buf.getvalue(), net)
    if out_dir is not None:
        result.write(out_dir)
    return result


def sweep_H(sc: Scenario, H_values: Sequence[float] = DEFAULT_H_GRID,
            out_dir: Optional[str | Path] = None) -> list[M.Summary]:
    """One independent run per H value; rows sorted by H."""
    if not H_values:
        raise ValueError("sweep needs at least one H value")
    schedules = schedules_for(sc)
    rows = []
    for h in sorted(set(float(h) for h in H_values)):
        sub = None if out_dir is None else Path(out_dir) / f"H_{h:g}"
        rows.append(run_scenario(sc.with_H(h), sub, schedules).summary)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "sweep.csv").write_text(M.to_csv(rows, M.Summary))
    return rows


@dataclass
class ConsumerTraceResult:
    t_switch: int
    old_sat: tuple
    new_sat: tuple
    rows: list[tuple[int, Optional[int], int]]  # (departure, arrival, seq)
    recovered: list[int]  # seqs re-requested through the old satellite
    unrecovered: list[int]
    burst: list[int]  # recovered seqs answered together from the old satellite's cache
    recovery_time: Optional[int]  # first recovered arrival minus switch time
    burst_end: Optional[int]  # last burst arrival minus switch time
    resume_gap: Optional[int]  # largest arrival gap after the burst
    oas_rtt: int  # C-Gw -> new satellite -> old satellite and back
    interval: int

    def to_csv(self) -> str:
        lines = ["interest_departure,data_arrival,seq"]
        lines += [f"{d},{'' if a is None else a},{s}" for d, a, s in self.rows]
        return "\n".join(lines) + "\n"


def pick_consumer_handover(sc: Scenario, schedules, clearance: int = 5 * NS) -> int:
    """Index of the first C-Gw switch at least ``clearance`` away from any P-Gw switch."""
    pgw, cgw = schedules
    p_switches = [w.t_end for w in pgw[:-1]]
    for k, w in enumerate(cgw[:-1]):
        t = w.t_end
        if t < clearance:
            continue
        if all(abs(t - s) >= clearance for s in p_switches):
            return k
    raise ValueError("no consumer handover clear of producer handovers")


def consumer_trace(sc: Scenario, rate: float = 1000.0, before: float = 1.0, after: float = 1.0,
                   handover: Optional[int] = None, out_dir: Optional[str | Path] = None) -> ConsumerTraceResult:
    """Constant-rate traffic across one C-Gw handover."""
    schedules = schedules_for(sc)
    k = pick_consumer_handover(sc, schedules) if handover is None else handover
    t_c = schedules[1][k].t_end
    start = t_c / NS - before
    run_sc = sc.override(duration=t_c / NS + after + 2 * sc.timeout / NS,
                         traffic={"rate": rate, "start": start, "duration": before + after})
    # Keep the full-horizon schedules: the selection near a horizon is cut short.
    res = run_scenario(run_sc, None, schedules)
    net = res.network
    c = net.consumer
    old, new = schedules[1][k].sat, schedules[1][k + 1].sat
    recovered_names = [r[3] for r in res.network.trace.records
                       if r[2] == "cgw-retransmit" and r[0] == t_c]
    recovered = sorted(int(n.rsplit("/", 1)[1]) for n in recovered_names)
    rows = [(c.departure[s], c.arrival[s], s) for s in range(len(c.departure))]
    unrecovered = [s for s in range(len(c.departure)) if not c.answered_original(s)]
    interval = int(round(NS / rate))
    # Recovered through the new satellite, as opposed to Data already on its way down.
    new_face = next(r[4] for r in net.trace.records if r[2] == "cgw-switch" and r[0] == t_c)
    arr = sorted((t, int(name[-1])) for name, (t, face) in net.cgw.recovery_arrivals.items()
                 if face == new_face)
    burst, recovery_time, burst_end, resume_gap = [], None, None, None
    if arr:
        first = arr[0][0]
        burst = sorted(s for a, s in arr if a - first < interval)
        recovery_time = first - t_c
        burst_end = max(c.arrival[s] for s in burst) - t_c
        later = sorted(a for a in c.arrival if a is not None and a >= burst_end + t_c)
        gaps = [b - a for a, b in zip(later, later[1:]) if b <= run_sc.traffic_stop]
        resume_gap = max(gaps) if gaps else None
    oas_rtt = 2 * M.path_delay(net.eph, net.dims, sc.consumer, new, old, t_c)
    result = ConsumerTraceResult(t_c, tuple(old), tuple(new), rows, recovered, unrecovered, burst,
                                 recovery_time, burst_end, resume_gap, oas_rtt, interval)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "consumer_trace.csv").write_text(result.to_csv())
        res.write(out)
    return result


def plot_sweep(rows: Sequence[M.Summary], out_dir: str | Path) -> list[Path]:
    """Render the loss-fraction and loss-length charts as SVG (needs matplotlib)."""
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hs = [f"{r.H:g}" for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    to = [100 * r.timeout_fraction for r in rows]
    rd = [100 * r.relative_distance_fraction for r in rows]
    ax.bar(hs, to, label="timeout")
    ax.bar(hs, rd, bottom=to, label="relative distance")
    ax.set_xlabel("handover length H (s)")
    ax.set_ylabel("handovers with losses (%)")
    ax.set_ylim(0, 100)
    ax.legend()
    p1 = out / "loss_fraction.svg"
    fig.savefig(p1, metadata={"Date": None})
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(hs, [r.mean_loss_length_s for r in rows], marker="o")
    ax.set_xlabel("handover length H (s)")
    ax.set_ylabel("mean loss period (s)")
    ax2 = ax.twinx()
    ax2.plot(hs, [100 * r.loss_to_gap_ratio for r in rows], marker="s", color="tab:red")
    ax2.set_ylabel("% of inter-handover time")
    p2 = out / "loss_length.svg"
    fig.savefig(p2, metadata={"Date": None})
    plt.close(fig)
    return [p1, p2]
