"""Cross-validate informativity verdicts on random integer instances.

    python3 scripts/soak.py --instances 200 --samples 500
"""

import argparse
import collections
import time

from informativity.instances import instance_stream
from informativity.oracle import cross_validate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args()
    t0 = time.perf_counter()
    tally = collections.Counter()
    critical = 0
    for k, inst in enumerate(instance_stream(args.seed, args.instances)):
        rep = cross_validate(inst.sys, inst.data, samples=args.samples, seed=k)
        for e in rep["properties"]:
            tally[(e["verdict"], e["check"])] += 1
        if rep["status"] != "ok":
            critical += 1
            bad = [e["property"] for e in rep["properties"] if e["check"] == "critical"]
            print(f"instance {k} ({inst.pattern.value}): CRITICAL on {bad}")
        elif args.verbose:
            print(f"instance {k}: ok")
    dt = time.perf_counter() - t0
    for key, cnt in sorted(tally.items()):
        print(f"{key[0]:<16} {key[1]:<8} {cnt}")
    print(f"{args.instances} instances, {critical} with critical disagreements, {dt:.1f}s")


if __name__ == "__main__":
    main()
