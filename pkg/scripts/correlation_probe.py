"""How much a WebID can guess about a hidden condition from terms it is allowed to see.

Search never returns out-of-scope resources, yet co-occurring observable terms
(insulin, glucose, ...) still correlate with the hidden one. For each hidden
condition this prints how often a visible hit's pod also holds the condition in
a resource the searcher cannot read, next to the same rate for hits on
unrelated common terms. The gap is a rough size for the residual risk that the
audit only flags.
"""

import argparse

from podsearch.generate import COMMON_TERMS, CORRELATED, WorkbenchConfig, generate_corpus
from podsearch.model import tokenize
from podsearch.search import Query, deploy, search


def hidden_rate(dep, hidden, terms):
    corpus = dep.corpus
    hits = flagged = 0
    for webid in sorted(corpus.webids):
        for term in terms:
            for r in search(dep, Query.make(webid, term)):
                pod = corpus.servers[r.server].pods[r.pod]
                hits += 1
                flagged += any(hidden in tokenize(x.text) and not x.acl.allows(webid)
                               for x in pod.resources.values())
    return hits, (flagged / hits if hits else 0.0)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--pods", type=int, default=20, help="pods per server")
    args = ap.parse_args()

    cfg = WorkbenchConfig(seed=args.seed, servers=4, pods_per_server=args.pods,
                          resources_per_pod=10, webids=6, acl_density=0.25, vocabulary_size=300)
    dep = deploy(generate_corpus(cfg))
    print(f"{'condition':<12} {'hits':>6} {'rate':>7}   {'baseline':>8}")
    for hidden, observable in CORRELATED.items():
        hits, rate = hidden_rate(dep, hidden, observable)
        _, base = hidden_rate(dep, hidden, COMMON_TERMS[:8])
        print(f"{hidden:<12} {hits:>6} {rate:>7.1%}   {base:>8.1%}")


if __name__ == "__main__":
    main()
