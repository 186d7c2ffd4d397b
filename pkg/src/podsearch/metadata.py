"""Metadata Manager: server-level and system-level source-selection metadata.

Both tiers are partitioned by WebID. ``per_webid[U]`` holds U's complete view
(its ACL-derived matches merged with public matches). WebIDs with no partition
on a server fall back to the shared ``public`` partition. Lookups can record
which partition they touched so separability can be audited.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from podsearch.bloom import PUBLIC, BloomSketch, bloom_build, bloom_build_sized
from podsearch.errors import ScopeViolation, StaleMetadata, StaleProfile
from podsearch.index import build_metadata_profile, index_is_current, reindex_dirty
from podsearch.model import Corpus, Server, WebId

PUBLIC_PARTITION = "*"


class StatsRecord(NamedTuple):
    source_count: int = 0
    tf_total: int = 0
    collection_size: int = 0

    def to_dict(self) -> dict:
        return self._asdict()


ZERO = StatsRecord()


@dataclass(frozen=True)
class MetadataEntry:
    sources: frozenset[str] = frozenset()
    stats: StatsRecord = ZERO
    # per-source tf, used to rank sources
    source_tf: tuple[tuple[str, int], ...] = ()

    @classmethod
    def from_sources(cls, tf_by_source: dict[str, int], collection_size: int) -> "MetadataEntry":
        if not tf_by_source:
            return EMPTY_ENTRY
        return cls(
            frozenset(tf_by_source),
            StatsRecord(len(tf_by_source), sum(tf_by_source.values()), collection_size),
            tuple(sorted(tf_by_source.items())),
        )

    def tf_of(self, source: str) -> int:
        return dict(self.source_tf).get(source, 0)

    def to_dict(self) -> dict:
        return {
            "sources": sorted(self.sources),
            "stats": self.stats.to_dict(),
            "source_tf": {s: tf for s, tf in self.source_tf},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetadataEntry":
        return cls(frozenset(doc["sources"]), StatsRecord(**doc["stats"]),
                   tuple(sorted((s, int(tf)) for s, tf in doc.get("source_tf", {}).items())))


EMPTY_ENTRY = MetadataEntry()

Partition = dict[str, MetadataEntry]


class AccessTrace:
    """Records (reader webid, partition key) for every metadata read."""

    def __init__(self) -> None:
        self.reads: list[tuple[str, str, str]] = []

    def record(self, tier: str, reader: WebId, partition: str) -> None:
        self.reads.append((tier, reader, partition))

    def foreign_reads(self) -> list[tuple[str, str, str]]:
        return [r for r in self.reads if r[2] not in (r[1], PUBLIC_PARTITION)]


def _partition_key(per_webid: dict[WebId, Partition], webid: WebId) -> str:
    return webid if webid in per_webid else PUBLIC_PARTITION


def _dump_partitions(per_webid: dict[WebId, Partition], public: Partition) -> tuple[dict, dict]:
    def enc(part: Partition) -> dict:
        return {t: part[t].to_dict() for t in sorted(part)}

    return {w: enc(per_webid[w]) for w in sorted(per_webid)}, enc(public)


def _load_partitions(doc: dict) -> tuple[dict[WebId, Partition], Partition]:
    def dec(part: dict) -> Partition:
        return {t: MetadataEntry.from_dict(e) for t, e in part.items()}

    return {w: dec(p) for w, p in doc["per_webid"].items()}, dec(doc["public"])


@dataclass
class ServerMetadata:
    server_id: str
    per_webid: dict[WebId, Partition] = field(default_factory=dict)
    public: Partition = field(default_factory=dict)
    as_of: int = 0

    def partition(self, webid: WebId, trace: AccessTrace | None = None) -> Partition:
        key = _partition_key(self.per_webid, webid)
        if trace is not None:
            trace.record(f"server:{self.server_id}", webid, key)
        return self.public if key == PUBLIC_PARTITION else self.per_webid[key]

    def lookup(self, webid: WebId, term: str, trace: AccessTrace | None = None) -> MetadataEntry:
        return self.partition(webid, trace).get(term, EMPTY_ENTRY)

    def to_dict(self) -> dict:
        per_webid, public = _dump_partitions(self.per_webid, self.public)
        return {"tier": "server", "server_id": self.server_id, "as_of": self.as_of,
                "per_webid": per_webid, "public": public}

    @classmethod
    def from_dict(cls, doc: dict) -> "ServerMetadata":
        per_webid, public = _load_partitions(doc)
        return cls(doc["server_id"], per_webid, public, int(doc["as_of"]))


@dataclass
class SystemMetadata:
    per_webid: dict[WebId, Partition] = field(default_factory=dict)
    public: Partition = field(default_factory=dict)
    as_of: int = 0
    snapshot_times: dict[str, int] = field(default_factory=dict)

    def partition(self, webid: WebId, trace: AccessTrace | None = None) -> Partition:
        key = _partition_key(self.per_webid, webid)
        if trace is not None:
            trace.record("system", webid, key)
        return self.public if key == PUBLIC_PARTITION else self.per_webid[key]

    def lookup(self, webid: WebId, term: str, trace: AccessTrace | None = None) -> MetadataEntry:
        return self.partition(webid, trace).get(term, EMPTY_ENTRY)

    def to_dict(self) -> dict:
        per_webid, public = _dump_partitions(self.per_webid, self.public)
        return {"tier": "system", "as_of": self.as_of,
                "snapshot_times": dict(sorted(self.snapshot_times.items())),
                "per_webid": per_webid, "public": public}

    @classmethod
    def from_dict(cls, doc: dict) -> "SystemMetadata":
        per_webid, public = _load_partitions(doc)
        return cls(per_webid, public, int(doc["as_of"]),
                   {s: int(t) for s, t in doc["snapshot_times"].items()})


def searchable_pods(server: Server) -> list[str]:
    """Pods whose owners registered them and enabled indexing."""
    if server.espresso_pod is None:
        return []
    return sorted(
        url for url, pod in server.pods.items()
        if pod.registered_for_search and pod.indexing_enabled
        and url in server.espresso_pod.authorized
    )


def aggregate_server_metadata(server: Server, as_of: int | None = None) -> ServerMetadata:
    if server.espresso_pod is None:
        return ServerMetadata(server.id, as_of=as_of or 0)
    profiles = []
    for url in searchable_pods(server):
        pod = server.pods[url]
        if url not in server.espresso_pod.profiles:
            raise StaleProfile(f"no profile for registered pod {url}")
        profile = server.espresso_pod.read_profile(url)
        if profile.built_at != pod.version:
            raise StaleProfile(f"profile for {url} built at {profile.built_at}, pod at {pod.version}")
        profiles.append(profile)

    public_size = sum(p.public_size for p in profiles)
    public_tf: dict[str, dict[str, int]] = {}
    for p in profiles:
        for term, st in p.public_terms.items():
            public_tf.setdefault(term, {})[p.pod_url] = st.tf_total
    public = {t: MetadataEntry.from_sources(tfs, public_size) for t, tfs in sorted(public_tf.items())}

    per_webid: dict[WebId, Partition] = {}
    for webid in sorted({w for p in profiles for w in p.per_webid}):
        collection = public_size + sum(p.scope_sizes.get(webid, 0) for p in profiles)
        tf: dict[str, dict[str, int]] = {}
        for p in profiles:
            for term, st in p.public_terms.items():
                tf.setdefault(term, {})[p.pod_url] = st.tf_total
            for term, st in p.per_webid.get(webid, {}).items():
                bucket = tf.setdefault(term, {})
                bucket[p.pod_url] = bucket.get(p.pod_url, 0) + st.tf_total
        per_webid[webid] = {t: MetadataEntry.from_sources(v, collection) for t, v in sorted(tf.items())}

    if as_of is None:
        as_of = max((p.built_at for p in profiles), default=0)
    md = ServerMetadata(server.id, per_webid, public, as_of)
    server.espresso_pod.server_metadata = md
    return md


def _aggregate(views: Iterable[tuple[str, Partition]]) -> Partition:
    hits: dict[str, dict[str, StatsRecord]] = {}
    for sid, part in views:
        for term, entry in part.items():
            if entry.stats.source_count > 0:
                hits.setdefault(term, {})[sid] = entry.stats
    out: Partition = {}
    for term in sorted(hits):
        per_server = hits[term]
        out[term] = MetadataEntry(
            frozenset(per_server),
            StatsRecord(len(per_server),
                        sum(s.tf_total for s in per_server.values()),
                        sum(s.collection_size for s in per_server.values())),
            tuple(sorted((sid, s.tf_total) for sid, s in per_server.items())),
        )
    return out


def aggregate_system_metadata(servers: Iterable[tuple[str, ServerMetadata, int]],
                              as_of: int | None = None) -> SystemMetadata:
    servers = sorted(servers, key=lambda item: item[0])
    webids = sorted({w for _, md, _ in servers for w in md.per_webid})
    per_webid = {w: _aggregate((sid, md.partition(w)) for sid, md, _ in servers) for w in webids}
    public = _aggregate((sid, md.public) for sid, md, _ in servers)
    times = {sid: t for sid, _, t in servers}
    if as_of is None:
        as_of = max(times.values(), default=0)
    return SystemMetadata(per_webid, public, as_of, times)


# --- probabilistic tier ----------------------------------------------------


@dataclass
class SketchStore:
    """Bloom sketches per scope. ``None`` scope is the shared public sketch."""

    system: dict[str | None, BloomSketch] = field(default_factory=dict)
    server: dict[str, dict[str | None, BloomSketch]] = field(default_factory=dict)

    def get(self, requester: WebId, scope: str | None, server_id: str | None = None,
            trace: AccessTrace | None = None) -> BloomSketch | None:
        if scope is not PUBLIC and scope != requester:
            raise ScopeViolation(f"{requester} may not read sketch scoped to {scope}")
        if trace is not None:
            tier = "bloom:system" if server_id is None else f"bloom:{server_id}"
            trace.record(tier, requester, PUBLIC_PARTITION if scope is PUBLIC else scope)
        table = self.system if server_id is None else self.server.get(server_id, {})
        return table.get(scope)

    def to_dict(self) -> dict:
        def enc(table: dict[str | None, BloomSketch]) -> dict:
            return {(PUBLIC_PARTITION if s is None else s): table[s].to_dict()
                    for s in sorted(table, key=lambda x: (x is not None, x or ""))}

        return {"system": enc(self.system),
                "server": {sid: enc(self.server[sid]) for sid in sorted(self.server)}}

    @classmethod
    def from_dict(cls, doc: dict) -> "SketchStore":
        def dec(table: dict) -> dict[str | None, BloomSketch]:
            return {(None if s == PUBLIC_PARTITION else s): BloomSketch.from_dict(d)
                    for s, d in table.items()}

        return cls(dec(doc["system"]), {sid: dec(t) for sid, t in doc["server"].items()})


def _sketch_keys(per_webid: dict[WebId, Partition], public: Partition
                 ) -> dict[str | None, set[tuple[str, str]]]:
    keys: dict[str | None, set[tuple[str, str]]] = {
        PUBLIC: {(t, src) for t, e in public.items() for src in e.sources}}
    for webid, part in per_webid.items():
        # public-derived matches live only in the shared sketch
        keys[webid] = {
            (t, src) for t, e in part.items()
            for src in e.sources - public.get(t, EMPTY_ENTRY).sources
        }
    return keys


def build_sketches(servers: dict[str, ServerMetadata], system: SystemMetadata,
                   target_fpr: float = 0.01, seed: int = 0,
                   fixed: tuple[int, int] | None = None) -> SketchStore:
    """Per-scope sketches sized for ``target_fpr``, or all at ``fixed`` = (m, k)."""

    def make(keys, scope, tier):
        if fixed is None:
            return bloom_build_sized(keys, target_fpr, seed, scope, tier)
        return bloom_build(keys, fixed[0], fixed[1], seed, scope, tier)

    store = SketchStore()
    for scope, keys in _sketch_keys(system.per_webid, system.public).items():
        store.system[scope] = make(keys, scope, "system")
    for sid in sorted(servers):
        md = servers[sid]
        store.server[sid] = {
            scope: make(keys, scope, "server")
            for scope, keys in _sketch_keys(md.per_webid, md.public).items()
        }
    return store


def bloom_select(store: SketchStore, webid: WebId, term: str, candidates: Iterable[str],
                 server_id: str | None = None, trace: AccessTrace | None = None) -> set[str]:
    """Contexts that may match ``term`` for ``webid``; never misses a true match."""
    own = store.get(webid, webid, server_id, trace)
    shared = store.get(webid, PUBLIC, server_id, trace)
    sketches = [s for s in (own, shared) if s is not None]
    return {c for c in candidates if any(s.contains(term, c) for s in sketches)}


# --- refresh ----------------------------------------------------------------


@dataclass
class MetadataSnapshot:
    servers: dict[str, ServerMetadata]
    system: SystemMetadata
    sketches: SketchStore
    as_of: int
    skipped: list[str] = field(default_factory=list)
    target_fpr: float = 0.01
    seed: int = 0
    fixed_bloom: tuple[int, int] | None = None

    def check_current(self, corpus: Corpus) -> None:
        if self.as_of != corpus.clock or corpus.dirty:
            raise StaleMetadata(f"metadata as of {self.as_of}, corpus at {corpus.clock}"
                                + (f", {len(corpus.dirty)} dirty pods" if corpus.dirty else ""))

    def to_dict(self) -> dict:
        return {
            "as_of": self.as_of,
            "skipped": sorted(self.skipped),
            "bloom": {"target_fpr": self.target_fpr, "seed": self.seed,
                      "fixed": None if self.fixed_bloom is None else list(self.fixed_bloom)},
            "servers": {sid: self.servers[sid].to_dict() for sid in sorted(self.servers)},
            "system": self.system.to_dict(),
            "sketches": self.sketches.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetadataSnapshot":
        return cls(
            {sid: ServerMetadata.from_dict(d) for sid, d in doc["servers"].items()},
            SystemMetadata.from_dict(doc["system"]),
            SketchStore.from_dict(doc["sketches"]),
            int(doc["as_of"]),
            list(doc.get("skipped", [])),
            float(doc["bloom"]["target_fpr"]),
            int(doc["bloom"]["seed"]),
            None if doc["bloom"].get("fixed") is None else tuple(doc["bloom"]["fixed"]),
        )


def refresh(corpus: Corpus, target_fpr: float = 0.01, seed: int = 0,
            fixed_bloom: tuple[int, int] | None = None) -> MetadataSnapshot:
    """Reindex dirty pods, re-aggregate both tiers and rebuild sketches."""
    reindex_dirty(corpus)
    skipped = [pod.url for _, pod in corpus.iter_pods() if not pod.indexing_enabled]
    for server, pod in corpus.iter_pods():
        # profiles for pods indexed before their server got a metadata container
        if (server.espresso_pod is not None and index_is_current(pod)
                and pod.url not in server.espresso_pod.profiles):
            build_metadata_profile(pod, pod.index_set, server)
    servers = {
        sid: aggregate_server_metadata(server, corpus.clock)
        for sid, server in sorted(corpus.servers.items()) if server.registered
    }
    system = aggregate_system_metadata(((sid, md, corpus.clock) for sid, md in servers.items()),
                                       corpus.clock)
    sketches = build_sketches(servers, system, target_fpr, seed, fixed_bloom)
    return MetadataSnapshot(servers, system, sketches, corpus.clock, skipped, target_fpr, seed,
                            fixed_bloom)
