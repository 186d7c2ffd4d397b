"""File-based workbench: generate, index, register, refresh, search, audit, bench.

A corpus directory holds ``corpus.json`` and ``registry.json`` plus the
artifacts each stage writes (``index/``, ``metadata/``). Every artifact is
written with sorted keys and no timestamps so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import random
import sys
import time
from pathlib import Path
from typing import Sequence

from podsearch.audit import run_audit
from podsearch.errors import InvalidConfig, PodSearchError, StaleMetadata, UnknownTarget
from podsearch.generate import WorkbenchConfig, generate_corpus
from podsearch.index import PodIndexSet, reindex_dirty
from podsearch.metadata import MetadataSnapshot
from podsearch.model import (
    Corpus,
    RegisterPod,
    corpus_to_dict,
    dumps_canonical,
    load_corpus,
    mutate,
    register_server,
)
from podsearch.overlay import OverlayNetwork, publish
from podsearch.overlay import register_server as overlay_register
from podsearch.search import Deployment, Query, deploy, execute

log = logging.getLogger("podsearch")


def _pod_file(pod_url: str) -> str:
    return hashlib.sha1(pod_url.encode("utf-8")).hexdigest()[:16] + ".json"


def _write(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_canonical(obj), encoding="utf-8")


def _corpus_digest(root: Path) -> str:
    h = hashlib.sha256()
    for name in ("corpus.json", "registry.json"):
        p = root / name
        h.update(p.read_bytes() if p.exists() else b"")
    return h.hexdigest()


def _load(root: Path) -> Corpus:
    path = root / "corpus.json"
    if not path.exists():
        raise UnknownTarget(f"{path} does not exist")
    reg = root / "registry.json"
    servers = json.loads(reg.read_text())["servers"] if reg.exists() else []
    return load_corpus(path, servers)


def _save(root: Path, corpus: Corpus) -> None:
    _write(root / "corpus.json", corpus_to_dict(corpus))
    _write(root / "registry.json",
           {"servers": sorted(s.id for s in corpus.servers.values() if s.registered)})


def _write_indexes(root: Path, corpus: Corpus, skipped: list[str]) -> dict:
    files = {}
    for _, pod in corpus.iter_pods():
        if pod.index_set is None:
            continue
        name = _pod_file(pod.url)
        _write(root / "index" / name, pod.index_set.to_dict())
        files[pod.url] = name
    manifest = {"corpus_sha256": _corpus_digest(root), "pods": files, "skipped": sorted(skipped)}
    _write(root / "index" / "manifest.json", manifest)
    return manifest


def _emit(obj, text: str | None, as_text: bool) -> None:
    if as_text and text is not None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(json.dumps(obj, sort_keys=True, indent=1) + "\n")


# --- commands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg = WorkbenchConfig.load(args.config)
    corpus = generate_corpus(cfg)
    out = Path(args.out)
    _save(out, corpus)
    _write(out / "config.json", cfg.to_dict())
    n_res = sum(1 for _ in corpus.iter_resources())
    _emit({"out": str(out), "servers": len(corpus.servers), "resources": n_res},
          f"wrote {out}/corpus.json: {len(corpus.servers)} servers, {n_res} resources", args.text)
    return 0


def cmd_index(args) -> int:
    root = Path(args.corpus)
    corpus = _load(root)
    skipped = reindex_dirty(corpus)
    manifest = _write_indexes(root, corpus, skipped)
    _emit({"indexed": len(manifest["pods"]), "skipped": manifest["skipped"]},
          f"indexed {len(manifest['pods'])} pods, skipped {len(skipped)}", args.text)
    return 0


def cmd_register(args) -> int:
    root = Path(args.corpus)
    corpus = _load(root)
    done: list[str] = []
    duplicates: list[str] = []
    if args.server:
        (done if register_server(corpus, args.server) else duplicates).append(args.server)
    elif args.pod:
        server, pod = corpus.find_pod(args.pod)
        if pod.registered_for_search:
            duplicates.append(pod.url)
        else:
            mutate(corpus, RegisterPod(pod.url))
            done.append(pod.url)
    else:
        for sid in sorted(corpus.servers):
            (done if register_server(corpus, sid) else duplicates).append(sid)
        for _, pod in corpus.iter_pods():
            if pod.indexing_enabled and not pod.registered_for_search:
                mutate(corpus, RegisterPod(pod.url))
                done.append(pod.url)
    _save(root, corpus)
    _emit({"registered": done, "already_registered": duplicates},
          f"registered {len(done)}, already registered {len(duplicates)}", args.text)
    return 0


def _deploy_from_disk(root: Path) -> tuple[Deployment, dict]:
    manifest_path = root / "metadata" / "manifest.json"
    if not manifest_path.exists():
        raise StaleMetadata("no metadata; run index and refresh first")
    manifest = json.loads(manifest_path.read_text())
    if manifest["corpus_sha256"] != _corpus_digest(root):
        raise StaleMetadata("corpus changed since last refresh; run refresh")
    corpus = _load(root)
    idx = json.loads((root / "index" / "manifest.json").read_text())
    for _, pod in corpus.iter_pods():
        name = idx["pods"].get(pod.url)
        if name is not None:
            pod.index_set = PodIndexSet.from_dict(json.loads((root / "index" / name).read_text()))
        corpus.dirty.discard(pod.url)
    snapshot = MetadataSnapshot.from_dict(json.loads((root / "metadata" / "snapshot.json").read_text()))
    network = OverlayNetwork.create(manifest["nodes"])
    for sid in sorted(snapshot.servers):
        overlay_register(network, sid)
    publish(network, snapshot)
    return Deployment(corpus, snapshot, network), manifest


def _refresh_settings(root: Path, args) -> dict:
    # flags win; otherwise fall back to the generator config stored with the corpus
    cfg = WorkbenchConfig.load(root / "config.json") if (root / "config.json").exists() else WorkbenchConfig()
    if (args.bloom_m is None) != (args.bloom_k is None):
        raise InvalidConfig("--bloom-m and --bloom-k must be given together")
    fixed = (args.bloom_m, args.bloom_k) if args.bloom_m is not None else cfg.fixed_bloom
    return {
        "mode": args.mode or cfg.mode,
        "nodes": args.nodes if args.nodes is not None else cfg.nodes,
        "fpr": args.fpr if args.fpr is not None else cfg.target_fpr,
        "seed": args.seed if args.seed is not None else cfg.seed,
        "fixed": fixed,
    }


def cmd_refresh(args) -> int:
    root = Path(args.corpus)
    corpus = _load(root)
    opts = _refresh_settings(root, args)
    dep = deploy(corpus, nodes=opts["nodes"], target_fpr=opts["fpr"], seed=opts["seed"],
                 fixed_bloom=opts["fixed"])
    _write_indexes(root, corpus, dep.snapshot.skipped)
    snap = dep.snapshot
    _write(root / "metadata" / "snapshot.json", snap.to_dict())
    _write(root / "metadata" / "system.json", snap.system.to_dict())
    for sid, md in snap.servers.items():
        _write(root / "metadata" / f"server-{sid}.json", md.to_dict())
    _write(root / "metadata" / "overlay.json", [n.table_dump() for n in dep.network.nodes])
    manifest = {"corpus_sha256": _corpus_digest(root), "mode": opts["mode"], "nodes": opts["nodes"],
                "as_of": snap.as_of}
    _write(root / "metadata" / "manifest.json", manifest)
    _emit({"servers": sorted(snap.servers), "skipped": snap.skipped, "mode": opts["mode"]},
          f"refreshed {len(snap.servers)} servers (mode={opts['mode']})", args.text)
    return 0


def cmd_search(args) -> int:
    root = Path(args.corpus)
    dep, manifest = _deploy_from_disk(root)
    query = Query.make(args.webid, args.query, args.strategy, args.mode or manifest["mode"])
    results = execute(dep, query).results
    _emit([r.to_dict() for r in results],
          "\n".join(f"{r.score:>6g}  {r.resource_url}" for r in results) or "(no results)",
          args.text)
    return 0


def cmd_audit(args) -> int:
    root = Path(args.corpus)
    corpus = _load(root)
    dep = deploy(corpus, seed=args.seed)
    report = run_audit(dep, seed=args.seed, queries_per_webid=args.queries,
                       bloom_probes=args.probes, inject_faults=args.inject_faults)
    if args.out:
        _write(Path(args.out), report.to_dict())
    _emit({"passed": report.passed, "guarantees": report.guarantee_verdicts,
           "goal_matrix": [{"goal": r["goal"], "status": r["status"]} for r in report.goal_matrix]},
          report.to_text(), args.text)
    return 0 if report.passed else 1


def cmd_bench(args) -> int:
    base = WorkbenchConfig.load(args.config)
    rows = []
    for scale in args.scales:
        cfg = WorkbenchConfig.from_dict({**base.to_dict(),
                                         "pods_per_server": base.pods_per_server * scale})
        t0 = time.perf_counter()
        corpus = generate_corpus(cfg)
        t1 = time.perf_counter()
        dep = deploy(corpus, nodes=cfg.nodes, target_fpr=cfg.target_fpr, seed=cfg.seed,
                     fixed_bloom=cfg.fixed_bloom)
        t2 = time.perf_counter()
        rng = random.Random(cfg.seed)
        vocab = sorted({t for _, _, r in corpus.iter_resources() for t in r.text.split()}) or ["x"]
        webids = sorted(corpus.webids) or ["nobody"]
        dep.counters.reset()
        for _ in range(args.queries):
            q = Query.make(rng.choice(webids), rng.sample(vocab, min(2, len(vocab))),
                           cfg.strategy, cfg.mode)
            execute(dep, q)
        t3 = time.perf_counter()
        n_pods = sum(1 for _ in corpus.iter_pods())
        rows.append({
            "scale": scale, "servers": cfg.servers, "pods": n_pods,
            "resources": sum(1 for _ in corpus.iter_resources()),
            "generate_s": round(t1 - t0, 4), "refresh_s": round(t2 - t1, 4),
            "search_s_per_query": round((t3 - t2) / max(1, args.queries), 6),
            "pod_reads_per_query": dep.counters.pod_index_reads / max(1, args.queries),
            "pod_fraction_touched": dep.counters.pod_index_reads / max(1, args.queries * n_pods),
        })
    text = "\n".join(
        f"scale={r['scale']:<3} pods={r['pods']:<5} refresh={r['refresh_s']:.3f}s "
        f"search={r['search_s_per_query'] * 1e3:.2f}ms/q touched={r['pod_fraction_touched']:.2%}"
        for r in rows)
    _emit(rows, text, args.text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podsearch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--text", action="store_true", help="human-readable output")
        p.set_defaults(func=func)
        return p

    p = add("generate", cmd_generate, "write a synthetic corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = add("index", cmd_index, "build per-pod indexes")
    p.add_argument("--corpus", required=True)

    p = add("register", cmd_register, "register servers / pods for search")
    p.add_argument("--corpus", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--server")
    g.add_argument("--pod")

    p = add("refresh", cmd_refresh, "rebuild indexes, metadata and sketches")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("exact", "bloom"), default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--fpr", type=float, default=None, help="target Bloom false-positive rate")
    p.add_argument("--bloom-m", type=int, default=None, help="fixed Bloom size in bits")
    p.add_argument("--bloom-k", type=int, default=None, help="fixed Bloom hash count")
    p.add_argument("--seed", type=int, default=None)

    p = add("search", cmd_search, "run a query as a WebID")
    p.add_argument("--corpus", required=True)
    p.add_argument("--webid", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--strategy", choices=("direct", "propagate"), default="direct")
    p.add_argument("--mode", choices=("exact", "bloom"), default=None)

    p = add("audit", cmd_audit, "verify the privacy guarantees")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.add_argument("--inject-faults", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries", type=int, default=10, help="random queries per webid")
    p.add_argument("--probes", type=int, default=100_000, help="Bloom probes per cell")

    p = add("bench", cmd_bench, "time each pipeline stage across scales")
    p.add_argument("--config", required=True)
    p.add_argument("--scales", type=lambda s: [int(x) for x in s.split(",")], default=[1, 2, 4])
    p.add_argument("--queries", type=int, default=50)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (PodSearchError, InvalidConfig) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
