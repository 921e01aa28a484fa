"""``leo-ndn-sim`` command line.

Exit status: 0 on success, 2 on a configuration error (including an access
schedule gap), 3 when ``--self-check`` finds a violated expectation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..constellation import NS, ScheduleGapError
from ..mobility import ScenarioError
from . import experiments, scenario
from .scenario import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _load(args) -> scenario.Scenario:
    over: dict = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "duration", None) is not None:
        over["duration"] = args.duration
    if getattr(args, "rate", None) is not None:
        over.setdefault("traffic", {})["rate"] = args.rate
    if getattr(args, "H", None) is not None:
        h = args.H
        over.setdefault("protocol", {})["H"] = h if len(h) > 1 else h[0]
    if args.config is None:
        return scenario.from_dict(over)
    return scenario.load(args.config, over)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="scenario JSON file (defaults to the built-in scenario)")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leo-ndn-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and write trace and CSV files")
    _common(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--H", type=_floats, help="handover length in seconds")
    p.add_argument("--duration", type=float)
    p.add_argument("--rate", type=float, help="consumer Interests per second")
    p.add_argument("--self-check", action="store_true",
                   help="exit 3 if a loss period lacks its handover or a timeout happens with large H")

    p = sub.add_parser("sweep", help="run one scenario per handover length")
    _common(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--H", type=_floats, default=None, help="comma-separated list, e.g. 0,0.1,0.25")
    p.add_argument("--duration", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--plot", action="store_true", help="also write SVG charts (needs matplotlib)")
    p.add_argument("--self-check", action="store_true")

    p = sub.add_parser("consumer-trace", help="per-packet trace across one C-Gw handover")
    _common(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--rate", type=float, default=1000.0)
    p.add_argument("--handover", type=int, help="index of the C-Gw handover (default: first clear one)")

    p = sub.add_parser("validate-config", help="check a scenario file and print the resolved values")
    _common(p)
    return parser


def _cmd_run(args) -> int:
    sc = _load(args)
    if len(sc.H) != 1:
        raise ConfigError("run takes a single H value; use sweep for several")
    res = experiments.run_scenario(sc, args.out)
    s = res.summary
    print(f"handovers={s.handovers} lossy={s.lossy} timeout={s.timeout_periods} "
          f"relative-distance={s.relative_distance_periods} mean_loss={s.mean_loss_length_s:.4f}s")
    if args.self_check:
        problems = []
        if res.orphans:
            problems.append(f"{len(res.orphans)} loss runs not attributable to a producer handover")
        if s.timeout_periods and s.H >= 1.0:
            problems.append("link-query timeouts with H >= 1 s")
        for msg in problems:
            print(f"self-check: {msg}", file=sys.stderr)
        if problems:
            return EXIT_CHECK
    return EXIT_OK


def _cmd_sweep(args) -> int:
    h_values = args.H
    args.H = None
    sc = _load(args)
    if h_values is None:
        h_values = [h / NS for h in sc.H] if len(sc.H) > 1 else list(scenario.DEFAULT_H_GRID)
    rows = experiments.sweep_H(sc, h_values, args.out)
    for r in rows:
        print(f"H={r.H:g} lossy={r.lossy_fraction:.3f} timeout={r.timeout_fraction:.3f} "
              f"relative-distance={r.relative_distance_fraction:.3f} mean_loss={r.mean_loss_length_s:.4f}s "
              f"ratio={r.loss_to_gap_ratio:.5f}")
    if args.plot:
        experiments.plot_sweep(rows, args.out)
    if args.self_check:
        bad = [r for r in rows if r.loss_to_gap_ratio >= 0.01 or (r.H == 0 and r.lossy_fraction < 1.0)]
        for r in bad:
            print(f"self-check: H={r.H:g} row out of bounds", file=sys.stderr)
        if bad:
            return EXIT_CHECK
    return EXIT_OK


def _cmd_consumer_trace(args) -> int:
    sc = _load(args)
    res = experiments.consumer_trace(sc, rate=args.rate, handover=args.handover, out_dir=args.out)
    if res.recovery_time is None:
        rec = "nothing to recover"
    else:
        rec = (f"burst of {len(res.burst)} after {res.recovery_time / 1e6:.3f} ms "
               f"(OAS round trip {res.oas_rtt / 1e6:.3f} ms)")
    print(f"switch at {res.t_switch / NS:.3f}s {res.old_sat}->{res.new_sat}: "
          f"{len(res.recovered)} re-requested, {rec}, {len(res.unrecovered)} unrecovered")
    return EXIT_CHECK if res.unrecovered else EXIT_OK


def _cmd_validate(args) -> int:
    sc = _load(args)
    print(json.dumps(sc.raw, indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "consumer-trace": _cmd_consumer_trace,
    "validate-config": _cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ScenarioError, ScheduleGapError) as exc:
        print(f"leo-ndn-sim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
