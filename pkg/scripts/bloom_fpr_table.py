"""Measured vs theoretical Bloom false-positive rate over a grid of (m, k, n)."""

import argparse

from podsearch.audit import measure_bloom_fpr
from podsearch.bloom import optimal_params


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--probes", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--targets", default="0.05,0.01,0.001", help="FPR targets to size for")
    ap.add_argument("--n", type=int, default=1000, help="design capacity")
    args = ap.parse_args()

    grid = []
    ns = sorted({0, args.n // 4, args.n // 2, args.n, 2 * args.n, 4 * args.n})
    for target in (float(t) for t in args.targets.split(",")):
        m, k = optimal_params(args.n, target)
        grid.append((m, k, ns))
    rows, verdict = measure_bloom_fpr(grid, args.probes, args.seed)
    print(f"{'m':>7} {'k':>3} {'n':>6} {'measured':>10} {'theory':>10} {'FN':>4}")
    for r in rows:
        print(f"{r.m:>7} {r.k:>3} {r.n:>6} {r.measured:>10.5f} {r.theoretical:>10.5f} "
              f"{r.false_negatives:>4}")
    print("verdict:", "pass" if verdict.passed else f"fail {verdict.counterexamples}")


if __name__ == "__main__":
    main()
