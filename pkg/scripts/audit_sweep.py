"""Run the full audit (with fault injection) over many random corpora and tally verdicts."""

import argparse
import collections
import random
import time

from podsearch.audit import run_audit
from podsearch.generate import RandomLimits, random_corpus
from podsearch.search import deploy


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpora", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--queries", type=int, default=5, help="random queries per webid")
    args = ap.parse_args()

    tally = collections.Counter()
    faults = collections.Counter()
    t0 = time.perf_counter()
    for i in range(args.corpora):
        rng = random.Random(args.seed * 1_000_003 + i)
        dep = deploy(random_corpus(rng, RandomLimits()))
        report = run_audit(dep, seed=i, queries_per_webid=args.queries, bloom_probes=2000,
                           inject_faults=True, bloom_grid=((1024, 3, (0, 64, 128)),))
        for g, ok in report.guarantee_verdicts.items():
            tally[g, ok] += 1
        for f in report.faults:
            if f["applicable"]:
                faults[f["kind"], f["detected"]] += 1
    print(f"{args.corpora} corpora in {time.perf_counter() - t0:.1f}s")
    for g in ("PG1", "PG2", "PG3", "PG4"):
        print(f"  {g}: pass={tally[g, True]} fail={tally[g, False]}")
    for kind in sorted({k for k, _ in faults}):
        print(f"  fault {kind:<22} detected={faults[kind, True]} missed={faults[kind, False]}")


if __name__ == "__main__":
    main()
