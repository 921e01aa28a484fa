"""How often is the producer's next access satellite closer to the consumer gateway?

A relative-distance loss needs the new satellite to be nearer (in path
delay) to the C-Gw than the old one: Interests sent to the old satellite
just before the switch then arrive after it has lost its ground link.
This script counts such handovers for several shell phasings and for the
C-Gw east or west of the producer, without running the packet simulator.
"""

import argparse

from leo_ndn_sim.constellation import Ephemeris
from leo_ndn_sim.harness import experiments, metrics, scenario


def closer_fraction(sc):
    pgw, cgw = experiments.schedules_for(sc)
    recs = metrics.handover_records(pgw, "producer", eph=Ephemeris(sc.shell), dims=sc.shell.dims,
                                    viewer=sc.consumer, viewer_schedule=cgw)
    return sum(r.d_new < r.d_old for r in recs), len(recs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=10_000.0)
    args = ap.parse_args()

    p = scenario.PRODUCER_LON
    east = scenario.DEFAULTS["consumer_gateway"]["lon"]
    west = p - (east - p)
    print(f"{'phasing':>8} {'C-Gw':>5} {'closer':>7} {'handovers':>10} {'fraction':>9}")
    for phasing in (0.0, 0.25, 0.5):
        for side, lon in (("east", east), ("west", west)):
            sc = scenario.default_scenario(duration=args.duration,
                                        shell={"phasing_offset": phasing},
                                        consumer_gateway={"lat": 42.0, "lon": lon})
            k, n = closer_fraction(sc)
            print(f"{phasing:8g} {side:>5} {k:7d} {n:10d} {k / n:9.2f}")


if __name__ == "__main__":
    main()
