"""Sweep the producer handover length and print the loss table.

    python demos/h_sweep.py --duration 3000 --rate 20 --out /tmp/sweep

Each H value is an independent run over the same access schedules.  With
``--plot`` the two SVG charts are written next to ``sweep.csv``.
"""

import argparse

from leo_ndn_sim.harness import experiments, scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=3000.0)
    ap.add_argument("--rate", type=float, default=20.0)
    ap.add_argument("--H", default="0,0.1,0.25,0.5,1,2")
    ap.add_argument("--out", default=None)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    sc = scenario.default_scenario(duration=args.duration, traffic={"rate": args.rate})
    hs = [float(h) for h in args.H.split(",")]
    rows = experiments.sweep_H(sc, hs, args.out)

    print(f"{'H (s)':>6} {'lossy':>6} {'timeout':>8} {'rel-dist':>9} {'mean loss (s)':>14} {'loss/gap':>9}")
    for r in rows:
        print(f"{r.H:6g} {r.lossy_fraction:6.2f} {r.timeout_fraction:8.2f} {r.relative_distance_fraction:9.2f} "
              f"{r.mean_loss_length_s:14.4f} {r.loss_to_gap_ratio:9.5f}")
    if args.plot and args.out:
        for p in experiments.plot_sweep(rows, args.out):
            print("wrote", p)


if __name__ == "__main__":
    main()
