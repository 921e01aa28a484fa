"""Walk through one consumer-gateway handover at 1000 Interests/s.

Prints the Interests that were in flight at the switch, when their Data
came back through the old access satellite, and how regular delivery
resumes afterwards.
"""

import argparse

from leo_ndn_sim.constellation import NS
from leo_ndn_sim.harness import experiments, scenario

MS = 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--handover", type=int, default=None, help="C-Gw handover index")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    res = experiments.consumer_trace(scenario.default_scenario(), rate=1000.0, handover=args.handover,
                                     out_dir=args.out)
    t0 = res.t_switch
    print(f"C-Gw switches {res.old_sat} -> {res.new_sat} at t = {t0 / NS:.6f} s")
    print(f"{len(res.recovered)} pending Interests re-requested through the old satellite")
    print(f"computed round trip C-Gw -> new -> old satellite: {res.oas_rtt / MS:.3f} ms")
    if res.burst:
        print(f"burst of {len(res.burst)} Data between {res.recovery_time / MS:.3f} and "
              f"{res.burst_end / MS:.3f} ms after the switch")
    print(f"largest gap in later arrivals: {res.resume_gap / MS:.4f} ms (interval {res.interval / MS:.1f} ms)")
    print(f"unrecovered sequence numbers: {res.unrecovered or 'none'}")

    print("\n  seq   departure (ms)   arrival (ms)   relative to switch")
    window = [r for r in res.rows if r[1] is not None and abs(r[1] - t0) < 30 * MS]
    for dep, arr, seq in window[:: max(1, len(window) // 25)]:
        mark = " recovered" if seq in res.recovered else ""
        print(f"{seq:5d} {(dep - t0) / MS:16.3f} {(arr - t0) / MS:14.3f}{mark}")


if __name__ == "__main__":
    main()
