"""Privacy audit: independent oracles, metadata reconstruction and checkers.

Every checker returns a :class:`Verdict` whose pass/fail is decided purely by
whether it collected counterexamples. Oracles here deliberately avoid the
engine's code paths (their own tokenizer regex, direct ACL scans).
"""

from __future__ import annotations

import copy
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple

from podsearch.bloom import BloomSketch, membership_key, theoretical_fpr
from podsearch.errors import IncompleteAudit, MixedServerLog
from podsearch.index import InvertedIndex, Posting
from podsearch.metadata import AccessTrace, MetadataEntry, searchable_pods
from podsearch.model import Corpus, WebId
from podsearch.search import Deployment, Query, execute

UNKNOWN_WEBID = "urn:podsearch:unknown-webid"
MAX_COUNTEREXAMPLES = 100

_WORD = re.compile(r"[a-z0-9]+")


def _terms_of(text: str) -> list[str]:
    return _WORD.findall(text.lower())


@dataclass
class Verdict:
    name: str
    counterexamples: list[Any] = field(default_factory=list)
    checked: int = 0
    total_failures: int = 0

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def fail(self, example: Any) -> None:
        self.total_failures += 1
        if len(self.counterexamples) < MAX_COUNTEREXAMPLES:
            self.counterexamples.append(example)

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": "pass" if self.passed else "fail",
                "checked": self.checked, "failures": self.total_failures,
                "counterexamples": self.counterexamples}


# --- brute-force search oracle --------------------------------------------------


def _discoverable(corpus: Corpus) -> set[str]:
    return {url for server in corpus.servers.values() for url in searchable_pods(server)}


def oracle_search(corpus: Corpus, webid: WebId, terms: Iterable[str],
                  discoverable_only: bool = False) -> set[str]:
    """Full scan of every resource ``webid`` may read; no index is consulted."""
    wanted = {t for chunk in terms for t in _terms_of(chunk)}
    pods = _discoverable(corpus) if discoverable_only else None
    out = set()
    for server in corpus.servers.values():
        for pod in server.pods.values():
            if pods is not None and pod.url not in pods:
                continue
            for res in pod.resources.values():
                if not (res.acl.public or webid in res.acl.readers):
                    continue
                if wanted and wanted <= set(_terms_of(res.text)):
                    out.add(res.url)
    return out


# --- reconstruction functions ------------------------------------------------------


class ResultRecord(NamedTuple):
    webid: WebId
    term: str
    server_id: str
    result_pod_urls: frozenset[str]


Cell = tuple[frozenset, int]
_EMPTY_CELL: Cell = (frozenset(), 0)


@dataclass
class ReconstructedServerMetadata:
    server_id: str | None
    entries: dict[WebId, dict[str, Cell]] = field(default_factory=dict)

    def get(self, webid: WebId, term: str) -> Cell:
        return self.entries.get(webid, {}).get(term, _EMPTY_CELL)


@dataclass
class ReconstructedSystemMetadata:
    entries: dict[WebId, dict[str, Cell]] = field(default_factory=dict)

    def get(self, webid: WebId, term: str) -> Cell:
        return self.entries.get(webid, {}).get(term, _EMPTY_CELL)


def f_s(log: Iterable[ResultRecord]) -> ReconstructedServerMetadata:
    """Server-level reconstruction: union of authorised result pods per (webid, term)."""
    out = ReconstructedServerMetadata(None)
    for rec in log:
        if out.server_id is None:
            out.server_id = rec.server_id
        elif rec.server_id != out.server_id:
            raise MixedServerLog(f"{rec.server_id} != {out.server_id}")
        pods, _ = out.entries.setdefault(rec.webid, {}).get(rec.term, _EMPTY_CELL)
        pods = pods | rec.result_pod_urls
        out.entries[rec.webid][rec.term] = (pods, len(pods))
    return out


def f_ns(snapshots: Iterable[tuple[str, int, ReconstructedServerMetadata]]
         ) -> ReconstructedSystemMetadata:
    """Overlay-level reconstruction: servers with a non-empty authorised result per (webid, term)."""
    servers: dict[WebId, dict[str, set[str]]] = {}
    for server_id, _time, ms in snapshots:
        for webid, row in ms.entries.items():
            for term, (_, count) in row.items():
                if count > 0:
                    servers.setdefault(webid, {}).setdefault(term, set()).add(server_id)
    return ReconstructedSystemMetadata({
        w: {t: (frozenset(s), len(s)) for t, s in row.items()} for w, row in servers.items()
    })


# --- authorised evaluation -----------------------------------------------------------


def authorized_result(dep: Deployment, webid: WebId, term: str, server_id: str) -> frozenset[str]:
    """Result(w, q, S): searchable pods on S whose index for w yields a posting for q."""
    server = dep.corpus.servers[server_id]
    pods = set()
    for url in searchable_pods(server):
        iset = server.pods[url].index_set
        if iset is not None and dep.lookup(iset, webid, term):
            pods.add(url)
    return frozenset(pods)


def _metadata_domain(dep: Deployment) -> dict[WebId, set[str]]:
    snap = dep.snapshot
    domain: dict[WebId, set[str]] = {}
    parts = [snap.system] + [snap.servers[s] for s in sorted(snap.servers)]
    public_terms: set[str] = set()
    for md in parts:
        for w, part in md.per_webid.items():
            domain.setdefault(w, set()).update(part)
        public_terms.update(md.public)
    for w in set(dep.corpus.webids) | set(domain):
        domain.setdefault(w, set()).update(public_terms)
    return domain


def _cell(entry: MetadataEntry) -> Cell:
    return (entry.sources, entry.stats.source_count)


def _compare(verdict: Verdict, tier: str, where: str | None, webid: WebId, term: str,
             maintained: Cell, rebuilt: Cell) -> None:
    verdict.checked += 1
    if maintained != rebuilt:
        verdict.fail({
            "tier": tier, "where": where, "webid": webid, "term": term,
            "extra": sorted(maintained[0] - rebuilt[0]),
            "missing": sorted(rebuilt[0] - maintained[0]),
            "maintained_count": maintained[1], "reconstructed_count": rebuilt[1],
        })


def _reconstruct(dep: Deployment, domain: dict[WebId, set[str]]
                 ) -> tuple[dict[str, ReconstructedServerMetadata], ReconstructedSystemMetadata]:
    per_server = {}
    for sid in sorted(dep.snapshot.servers):
        log = [ResultRecord(w, t, sid, authorized_result(dep, w, t, sid))
               for w in sorted(domain) for t in sorted(domain[w])]
        rec = f_s(log)
        rec.server_id = sid
        per_server[sid] = rec
    times = dep.snapshot.system.snapshot_times
    system = f_ns((sid, times.get(sid, 0), per_server[sid]) for sid in sorted(per_server))
    return per_server, system


def _check_stats(dep: Deployment, verdict: Verdict, webid: WebId, term: str) -> None:
    """tf_total / collection_size recomputed from authorised postings and scope sizes."""
    for sid in sorted(dep.snapshot.servers):
        server = dep.corpus.servers[sid]
        entry = dep.snapshot.servers[sid].lookup(webid, term)
        if entry.stats.source_count == 0:
            continue
        tf = 0
        collection = 0
        for url in searchable_pods(server):
            pod = server.pods[url]
            collection += sum(1 for r in pod.resources.values()
                              if r.acl.public or webid in r.acl.readers)
            if pod.index_set is not None:
                tf += sum(p.tf for p in dep.lookup(pod.index_set, webid, term))
        verdict.checked += 1
        if (tf, collection) != (entry.stats.tf_total, entry.stats.collection_size):
            verdict.fail({"tier": "server-stats", "where": sid, "webid": webid, "term": term,
                          "maintained": [entry.stats.tf_total, entry.stats.collection_size],
                          "reconstructed": [tf, collection]})


def check_conservativity(dep: Deployment) -> Verdict:
    """Maintained metadata must equal f_S / f_NS over authorised results."""
    v = Verdict("pg4_conservativity")
    domain = _metadata_domain(dep)
    per_server, system = _reconstruct(dep, domain)
    for w in sorted(domain):
        for t in sorted(domain[w]):
            for sid, rec in per_server.items():
                _compare(v, "server", sid, w, t,
                         _cell(dep.snapshot.servers[sid].lookup(w, t)), rec.get(w, t))
            _compare(v, "system", None, w, t, _cell(dep.snapshot.system.lookup(w, t)),
                     system.get(w, t))
            _check_stats(dep, v, w, t)
    return v


def check_separability(dep: Deployment, webids: Iterable[WebId] | None = None) -> Verdict:
    """Each WebID's partition must be rebuildable from that WebID's results alone,
    no two WebIDs may share a partition object, and U's read path must stay in U's
    partition (or the shared public one)."""
    v = Verdict("pg4_separability")
    full = _metadata_domain(dep)
    targets = sorted(full if webids is None else webids)
    snap = dep.snapshot
    for md_name, md in [("system", snap.system)] + [(s, snap.servers[s]) for s in sorted(snap.servers)]:
        seen: dict[int, WebId] = {}
        for w in sorted(md.per_webid):
            part = md.per_webid[w]
            v.checked += 1
            if id(part) in seen:
                v.fail({"tier": md_name, "shared_partition": [seen[id(part)], w]})
            seen.setdefault(id(part), w)
            for t, entry in part.items():
                other = [x for x in md.per_webid if x != w and md.per_webid[x].get(t) is entry
                         and entry.stats.source_count > 0]
                if other:
                    v.fail({"tier": md_name, "shared_entry": [w] + other, "term": t})
    for w in targets:
        domain = {w: full.get(w, set())}
        per_server, system = _reconstruct(dep, domain)
        for t in sorted(domain[w]):
            for sid, rec in per_server.items():
                _compare(v, "server", sid, w, t, _cell(snap.servers[sid].lookup(w, t)), rec.get(w, t))
            _compare(v, "system", None, w, t, _cell(snap.system.lookup(w, t)), system.get(w, t))
        trace = AccessTrace()
        for t in sorted(domain[w])[:20]:
            for mode in ("exact", "bloom"):
                execute(dep, Query(w, (t,), "direct", mode), trace)
        for read in trace.foreign_reads():
            v.fail({"foreign_read": list(read)})
    return v


def check_scope_isolation(dep: Deployment, workload: Iterable[tuple[WebId, tuple[str, ...]]],
                          strategies: Iterable[str] = ("direct",),
                          modes: Iterable[str] = ("exact",)) -> Verdict:
    """Every result lies in V(webid) and equals the brute-force oracle; every
    posting handed out by the pod lookup path stays in the caller's scope."""
    v = Verdict("pg1_scope_isolation")
    corpus = dep.corpus
    workload = list(workload)
    strategies, modes = list(strategies), list(modes)
    scopes: dict[WebId, set[str]] = {}

    def scope(w: WebId) -> set[str]:
        if w not in scopes:
            scopes[w] = {r.url for _, _, r in corpus.iter_resources()
                         if r.acl.public or w in r.acl.readers}
        return scopes[w]

    for webid, terms in workload:
        expected = oracle_search(corpus, webid, terms, discoverable_only=True)
        for strategy in strategies:
            for mode in modes:
                got = [r.resource_url for r in
                       execute(dep, Query.make(webid, terms, strategy, mode)).results]
                v.checked += 1
                leaked = set(got) - scope(webid)
                if leaked or set(got) != expected or len(got) != len(set(got)):
                    v.fail({"webid": webid, "terms": list(terms), "strategy": strategy,
                            "mode": mode, "leaked": sorted(leaked),
                            "missing": sorted(expected - set(got)),
                            "unexpected": sorted(set(got) - expected)})
    terms_used = sorted({t for _, ts in workload for c in ts for t in _terms_of(c)})
    webids_used = sorted({w for w, _ in workload})
    for server in corpus.servers.values():
        for url in searchable_pods(server):
            iset = server.pods[url].index_set
            if iset is None:
                continue
            for w in webids_used:
                for t in terms_used:
                    v.checked += 1
                    stray = {p.resource_url for p in dep.lookup(iset, w, t)} - scope(w)
                    if stray:
                        v.fail({"webid": w, "term": t, "pod": url, "leaked": sorted(stray)})
    return v


def brute_force_index(resources: Iterable[tuple[str, str]]) -> dict[str, dict[str, int]]:
    index: dict[str, dict[str, int]] = {}
    for url, text in resources:
        for term, tf in Counter(_terms_of(text)).items():
            index.setdefault(term, {})[url] = tf
    return index


def check_index_isolation(corpus: Corpus) -> Verdict:
    """scoped[U] must equal a brute-force index over U's ACL-listed, non-public resources."""
    v = Verdict("pg2_index_isolation")
    for _, pod in corpus.iter_pods():
        iset = pod.index_set
        if iset is None:
            continue
        res = list(pod.resources.values())
        webids = set(corpus.webids) | set(iset.scoped)
        for w in sorted(webids):
            allowed = {r.url for r in res if not r.acl.public and w in r.acl.readers}
            expected = brute_force_index((r.url, r.text) for r in res if r.url in allowed)
            got = iset.scoped.get(w, InvertedIndex()).entries
            v.checked += 1
            cross = sorted({u for plist in got.values() for u in plist} - allowed)
            if cross or got != expected:
                v.fail({"pod": pod.url, "webid": w, "cross_scope_postings": cross,
                        "extra_terms": sorted(set(got) - set(expected)),
                        "missing_terms": sorted(set(expected) - set(got))})
        expected_pub = brute_force_index((r.url, r.text) for r in res if r.acl.public)
        v.checked += 1
        if iset.public_index.entries != expected_pub:
            v.fail({"pod": pod.url, "webid": None, "public_index_mismatch": True})
    return v


# --- Bloom measurements -------------------------------------------------------------


@dataclass
class BloomRow:
    n: int
    m: int
    k: int
    probes: int
    false_positives: int
    false_negatives: int
    theoretical: float

    @property
    def measured(self) -> float:
        return self.false_positives / self.probes if self.probes else 0.0

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "k": self.k, "probes": self.probes,
                "measured_fpr": self.measured, "theoretical_fpr": self.theoretical,
                "false_positives": self.false_positives, "false_negatives": self.false_negatives}


DEFAULT_BLOOM_GRID: tuple[tuple[int, int, tuple[int, ...]], ...] = (
    # sized for 1% at n=1000
    (9586, 7, (0, 250, 500, 1000, 1500, 2000)),
    (2048, 3, (0, 100, 200, 400, 800)),
)


def measure_bloom_fpr(grid: Iterable[tuple[int, int, Iterable[int]]] = DEFAULT_BLOOM_GRID,
                      probes: int = 100_000, seed: int = 0) -> tuple[list[BloomRow], Verdict]:
    """Empirical FPR per (n, m, k) against (1 - e^{-kn/m})^k.

    Insert sets are nested and probes shared across n, so the measured FPR
    for a fixed (m, k) can only grow with n.
    """
    v = Verdict("pg3_bloom")
    rows: list[BloomRow] = []
    rng = random.Random(seed)
    for m, k, ns in grid:
        ns = sorted(set(ns))
        sketch = BloomSketch(m, k, seed=rng.getrandbits(32), tier="system")
        keys = [membership_key(f"t{rng.getrandbits(48):x}", f"ctx{i}") for i in range(ns[-1] if ns else 0)]
        probe_keys = [membership_key(f"p{rng.getrandbits(48):x}", f"absent{i}") for i in range(probes)]
        probe_pos = [sketch._positions(p) for p in probe_keys]
        inserted = 0
        prev = -1
        for n in ns:
            while inserted < n:
                sketch.add(keys[inserted])
                inserted += 1
            bits = sketch.bits
            fn = sum(1 for key in keys[:n] if key not in sketch)
            fp = sum(1 for pos in probe_pos if all(bits[p >> 3] & (1 << (p & 7)) for p in pos))
            row = BloomRow(n, m, k, probes, fp, fn, theoretical_fpr(n, m, k))
            rows.append(row)
            v.checked += 1
            if fn:
                v.fail({"m": m, "k": k, "n": n, "false_negatives": fn})
            if fp < prev:
                v.fail({"m": m, "k": k, "n": n, "non_monotone": [prev, fp]})
            if n == 0 and fp:
                v.fail({"m": m, "k": k, "n": 0, "false_positives_on_empty": fp})
            prev = fp
    return rows, v


# --- goal matrix --------------------------------------------------------------------

GOALS: tuple[tuple[str, str, tuple[str, ...], tuple[str, ...]], ...] = (
    # (goal, name, full coverage, partial coverage)
    ("G1", "Membership Inference", ("PG1", "PG3"), ()),
    ("G2", "Access Pattern Inference", ("PG1", "PG4"), ()),
    ("G3", "Keyword Frequency Estimation", ("PG2", "PG3"), ()),
    ("G4", "Index Reconstruction", ("PG2", "PG3", "PG4"), ()),
    ("G5", "Indirect Inference via Correlation", ("PG1", "PG2"), ("PG3", "PG4")),
    ("I1", "Direct Identification", ("PG1", "PG2"), ()),
    ("I2", "Re-identification via Quasi-identifiers", ("PG1", "PG2"), ("PG3",)),
)
GUARANTEES = ("PG1", "PG2", "PG3", "PG4")


def emit_goal_matrix(verdicts: dict[str, bool]) -> list[dict]:
    missing = [g for g in GUARANTEES if g not in verdicts]
    if missing:
        raise IncompleteAudit(f"no verdict for {', '.join(missing)}")
    rows = []
    for goal, name, full, partial in GOALS:
        residual = bool(partial)
        ok = all(verdicts[g] for g in full)
        if not ok:
            status = "degraded"
        elif residual:
            status = "mitigated-with-residual-risk"
        else:
            status = "mitigated"
        rows.append({
            "goal": goal, "name": name,
            "marks": {g: ("x" if g in full else "~" if g in partial else "") for g in GUARANTEES},
            "covered_by": list(full), "partial": list(partial), "residual": residual,
            "status": status, "failed_guarantees": [g for g in full if not verdicts[g]],
        })
    return rows


# --- fault injection ------------------------------------------------------------------

FAULT_KINDS = ("cross-scope-posting", "inflated-metadata", "shared-partition")


def inject_fault(dep: Deployment, kind: str, rng: random.Random) -> dict | None:
    """Plant one violation of ``kind`` in ``dep``. Returns a description, or None
    if the deployment offers no place to plant it."""
    corpus = dep.corpus
    if kind == "cross-scope-posting":
        sites = []
        for _, pod in corpus.iter_pods():
            if pod.index_set is None:
                continue
            for w in sorted(corpus.webids):
                for r in sorted(pod.resources.values(), key=lambda r: r.url):
                    if not r.acl.allows(w) and _terms_of(r.text):
                        sites.append((pod, w, r))
        if not sites:
            return None
        pod, w, r = rng.choice(sites)
        term = rng.choice(sorted(set(_terms_of(r.text))))
        pod.index_set.scoped.setdefault(w, InvertedIndex()).entries.setdefault(term, {})[r.url] = 1
        return {"kind": kind, "pod": pod.url, "webid": w, "resource": r.url, "term": term}

    snap = dep.snapshot
    if kind == "inflated-metadata":
        sites = []
        for sid in sorted(snap.servers):
            md = snap.servers[sid]
            pods = sorted(corpus.servers[sid].pods)
            for w in sorted(md.per_webid):
                for t in sorted(md.per_webid[w]):
                    for p in pods:
                        if p not in md.per_webid[w][t].sources:
                            sites.append((md, w, t, p))
        if not sites:
            return None
        md, w, t, p = rng.choice(sites)
        e = md.per_webid[w][t]
        md.per_webid[w][t] = MetadataEntry(
            e.sources | {p}, e.stats._replace(source_count=e.stats.source_count + 1),
            tuple(sorted(e.source_tf + ((p, 1),))))
        return {"kind": kind, "server": md.server_id, "webid": w, "term": t, "pod": p}

    if kind == "shared-partition":
        sites = []
        for sid in sorted(snap.servers):
            md = snap.servers[sid]
            ws = sorted(md.per_webid)
            sites += [(md, a, b) for a in ws for b in ws if a != b]
        if not sites:
            return None
        md, a, b = rng.choice(sites)
        md.per_webid[a] = md.per_webid[b]
        return {"kind": kind, "server": md.server_id, "webids": [a, b]}

    if kind == "foreign-index-read":
        def leaky(iset, webid, term):
            out: set[Posting] = set(iset.public_index.postings(term))
            for idx in iset.scoped.values():
                out |= idx.postings(term)
            return out

        dep.lookup = leaky
        return {"kind": kind}
    raise ValueError(f"unknown fault kind {kind!r}")


# --- full audit ------------------------------------------------------------------------


def random_workload(corpus: Corpus, rng: random.Random, per_webid: int = 10,
                    max_terms: int = 3) -> list[tuple[WebId, tuple[str, ...]]]:
    vocab = sorted({t for _, _, r in corpus.iter_resources() for t in _terms_of(r.text)})
    if not vocab:
        vocab = ["nothing"]
    workload = []
    for w in sorted(corpus.webids) + [UNKNOWN_WEBID]:
        for _ in range(per_webid):
            n = rng.randint(1, min(max_terms, len(vocab)))
            workload.append((w, tuple(rng.sample(vocab, n))))
    return workload


@dataclass
class AuditReport:
    pg1: Verdict
    pg2: Verdict
    pg3: Verdict
    pg3_table: list[BloomRow]
    pg4_conservativity: Verdict
    pg4_separability: Verdict
    goal_matrix: list[dict]
    faults: list[dict] = field(default_factory=list)

    @property
    def guarantee_verdicts(self) -> dict[str, bool]:
        return {
            "PG1": self.pg1.passed,
            "PG2": self.pg2.passed,
            "PG3": self.pg3.passed,
            "PG4": self.pg4_conservativity.passed and self.pg4_separability.passed,
        }

    @property
    def passed(self) -> bool:
        return all(self.guarantee_verdicts.values()) and all(f["detected"] for f in self.faults)

    def to_dict(self) -> dict:
        return {
            "pg1": self.pg1.to_dict(),
            "pg2": self.pg2.to_dict(),
            "pg3": {**self.pg3.to_dict(), "table": [r.to_dict() for r in self.pg3_table]},
            "pg4_conservativity": self.pg4_conservativity.to_dict(),
            "pg4_separability": self.pg4_separability.to_dict(),
            "goal_matrix": self.goal_matrix,
            "faults": self.faults,
            "passed": self.passed,
        }

    def to_text(self) -> str:
        lines = ["Guarantee checks"]
        for v in (self.pg1, self.pg2, self.pg3, self.pg4_conservativity, self.pg4_separability):
            lines.append(f"  {v.name:<22} {'PASS' if v.passed else 'FAIL':<5} "
                         f"checked={v.checked} failures={v.total_failures}")
        lines.append("")
        lines.append("Bloom false-positive rates")
        lines.append(f"  {'n':>6} {'m':>6} {'k':>3} {'measured':>10} {'theory':>10} {'FN':>4}")
        for r in self.pg3_table:
            lines.append(f"  {r.n:>6} {r.m:>6} {r.k:>3} {r.measured:>10.5f} "
                         f"{r.theoretical:>10.5f} {r.false_negatives:>4}")
        lines.append("")
        lines.append(f"  {'Adversary goal':<44}PG1 PG2 PG3 PG4  status")
        for row in self.goal_matrix:
            marks = " ".join(f"{row['marks'][g] or '.':>3}" for g in GUARANTEES)
            lines.append(f"  {row['goal']:<4}{row['name']:<40}{marks}  {row['status']}")
        if self.faults:
            lines.append("")
            lines.append("Fault injection")
            for f in self.faults:
                state = "n/a" if not f["applicable"] else ("detected" if f["detected"] else "MISSED")
                lines.append(f"  {f['kind']:<22} {state:<9} by={','.join(f['detected_by'])}")
        return "\n".join(lines) + "\n"


def run_checks(dep: Deployment, workload: list[tuple[WebId, tuple[str, ...]]]) -> dict[str, Verdict]:
    return {
        "pg1": check_scope_isolation(dep, workload),
        "pg2": check_index_isolation(dep.corpus),
        "pg4_conservativity": check_conservativity(dep),
        "pg4_separability": check_separability(dep),
    }


def run_audit(dep: Deployment, seed: int = 0, queries_per_webid: int = 10,
              bloom_probes: int = 100_000, inject_faults: bool = False,
              bloom_grid=DEFAULT_BLOOM_GRID) -> AuditReport:
    rng = random.Random(seed)
    workload = random_workload(dep.corpus, rng, queries_per_webid)
    checks = run_checks(dep, workload)
    table, pg3 = measure_bloom_fpr(bloom_grid, bloom_probes, seed)
    verdicts = {
        "PG1": checks["pg1"].passed, "PG2": checks["pg2"].passed, "PG3": pg3.passed,
        "PG4": checks["pg4_conservativity"].passed and checks["pg4_separability"].passed,
    }
    faults = []
    if inject_faults:
        for kind in FAULT_KINDS + ("foreign-index-read",):
            faults.append(fault_run(dep, kind, random.Random(f"{seed}:{kind}"), workload))
    return AuditReport(checks["pg1"], checks["pg2"], pg3, table, checks["pg4_conservativity"],
                       checks["pg4_separability"], emit_goal_matrix(verdicts), faults)


def fault_run(dep: Deployment, kind: str, rng: random.Random,
              workload: list[tuple[WebId, tuple[str, ...]]] | None = None) -> dict:
    """Inject ``kind`` into a copy of ``dep`` and report which checkers noticed."""
    victim = copy.deepcopy(dep)
    info = inject_fault(victim, kind, rng)
    if info is None:
        return {"kind": kind, "applicable": False, "detected": True, "detected_by": []}
    if workload is None:
        workload = random_workload(victim.corpus, rng)
    checks = run_checks(victim, workload)
    caught = [name for name, v in checks.items() if not v.passed]
    return {"kind": kind, "applicable": True, "detected": bool(caught), "detected_by": caught,
            "fault": info}
