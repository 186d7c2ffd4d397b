"""Search App: identity binding, tiered source selection and ranking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from podsearch.errors import EmptyQuery, StaleIndex, Unauthenticated, UnknownStrategy
from podsearch.index import PodIndexSet, Posting, lookup_postings
from podsearch.metadata import (
    AccessTrace,
    MetadataSnapshot,
    ServerMetadata,
    SketchStore,
    bloom_select,
    refresh,
    searchable_pods,
)
from podsearch.model import Corpus, WebId, tokenize
from podsearch.overlay import Match, OverlayNetwork, propagate_query, publish, register_server, select_servers

STRATEGIES = ("direct", "propagate")
MODES = ("exact", "bloom")

LookupFn = Callable[[PodIndexSet, WebId, str], "set[Posting]"]


@dataclass(frozen=True)
class Query:
    webid: WebId
    terms: tuple[str, ...]
    strategy: str = "direct"
    metadata_mode: str = "exact"

    @classmethod
    def make(cls, webid: WebId, terms: str | Iterable[str], strategy: str = "direct",
             metadata_mode: str = "exact") -> "Query":
        raw = [terms] if isinstance(terms, str) else list(terms)
        normal: list[str] = []
        for chunk in raw:
            for t in tokenize(chunk):
                if t not in normal:
                    normal.append(t)
        if not normal:
            raise EmptyQuery("query has no terms")
        if strategy not in STRATEGIES:
            raise UnknownStrategy(strategy)
        if metadata_mode not in MODES:
            raise UnknownStrategy(f"unknown metadata mode {metadata_mode!r}")
        return cls(webid, tuple(sorted(normal)), strategy, metadata_mode)


@dataclass(frozen=True)
class RankedResult:
    resource_url: str
    score: float
    server: str
    pod: str

    def to_dict(self) -> dict:
        return {"url": self.resource_url, "score": self.score, "server": self.server,
                "pod": self.pod}


@dataclass
class TouchCounters:
    server_reads: int = 0
    pod_index_reads: int = 0

    def reset(self) -> None:
        self.server_reads = 0
        self.pod_index_reads = 0


@dataclass
class SearchOutcome:
    results: list[RankedResult]
    servers: set[str] = field(default_factory=set)
    pods: set[str] = field(default_factory=set)


@dataclass
class Deployment:
    """A corpus together with its current metadata snapshot and overlay."""

    corpus: Corpus
    snapshot: MetadataSnapshot
    network: OverlayNetwork
    counters: TouchCounters = field(default_factory=TouchCounters)
    lookup: LookupFn = lookup_postings


def deploy(corpus: Corpus, nodes: int = 3, target_fpr: float = 0.01, seed: int = 0,
           fixed_bloom: tuple[int, int] | None = None) -> Deployment:
    """Refresh all metadata and register every server that has a metadata container."""
    snapshot = refresh(corpus, target_fpr, seed, fixed_bloom)
    network = OverlayNetwork.create(nodes)
    for sid in sorted(snapshot.servers):
        register_server(network, sid)
    publish(network, snapshot)
    return Deployment(corpus, snapshot, network)


def redeploy(dep: Deployment) -> Deployment:
    """Refresh in place after corpus mutations, keeping overlay registrations."""
    snap = refresh(dep.corpus, dep.snapshot.target_fpr, dep.snapshot.seed, dep.snapshot.fixed_bloom)
    for sid in sorted(snap.servers):
        if sid not in dep.network.registered:
            register_server(dep.network, sid)
    publish(dep.network, snap)
    dep.snapshot = snap
    return dep


def select_pods(server_md: ServerMetadata, webid: WebId, terms: Iterable[str], mode: str = "exact",
                sketches: SketchStore | None = None, candidates: Iterable[str] = (),
                trace: AccessTrace | None = None) -> set[str]:
    """Pods on one server that match every term for ``webid``.

    Bloom mode filters ``candidates`` through the server-tier sketches and may
    over-select; exact mode reads the metadata partition and never does.
    """
    terms = list(terms)
    if not terms:
        return set()
    if mode == "bloom":
        if sketches is None:
            raise ValueError("bloom mode needs sketches")
        pods = set(candidates)
        for t in terms:
            pods &= bloom_select(sketches, webid, t, sorted(pods), server_md.server_id, trace)
        return pods
    pods = set(server_md.lookup(webid, terms[0], trace).sources)
    for t in terms[1:]:
        pods &= server_md.lookup(webid, t, trace).sources
    return pods


def rank(matches: Iterable[Match],
         score: Callable[[tuple[int, ...]], float] = sum) -> list[RankedResult]:
    """Score each match (default: summed tf) and order by score desc, then url."""
    out = [RankedResult(url, score(tfs), server, pod) for url, tfs, server, pod in matches]
    out.sort(key=lambda r: (-r.score, r.resource_url))
    return out


def search_server(dep: Deployment, server_id: str, webid: WebId, terms: list[str], mode: str,
                  trace: AccessTrace | None = None, picked: set[str] | None = None) -> list[Match]:
    server = dep.corpus.servers[server_id]
    md = dep.snapshot.servers.get(server_id)
    if md is None:
        return []
    dep.counters.server_reads += 1
    searchable = searchable_pods(server)
    pods = select_pods(md, webid, terms, mode, dep.snapshot.sketches, searchable, trace)
    pods &= set(searchable)
    if picked is not None:
        picked |= pods
    matches: list[Match] = []
    for url in sorted(pods):
        pod = server.pods[url]
        iset = pod.index_set
        if iset is None or iset.built_at != pod.version:
            raise StaleIndex(url)
        dep.counters.pod_index_reads += 1
        hits: dict[str, dict[str, int]] = {}
        for t in terms:
            hits[t] = {p.resource_url: p.tf for p in dep.lookup(iset, webid, t)}
        common = set.intersection(*(set(h) for h in hits.values()))
        for rurl in sorted(common):
            matches.append((rurl, tuple(hits[t][rurl] for t in terms), server_id, url))
    return matches


def execute(dep: Deployment, query: Query, trace: AccessTrace | None = None) -> SearchOutcome:
    if not query.terms:
        raise EmptyQuery("query has no terms")
    if query.strategy not in STRATEGIES:
        raise UnknownStrategy(query.strategy)
    dep.snapshot.check_current(dep.corpus)
    terms = list(query.terms)
    picked: set[str] = set()
    if query.strategy == "direct":
        servers = select_servers(dep.network, query.webid, terms, query.metadata_mode, trace)
        matches: list[Match] = []
        for sid in servers:
            matches.extend(search_server(dep, sid, query.webid, terms, query.metadata_mode,
                                         trace, picked))
        chosen = set(servers)
    else:
        chosen = set()

        def run(sid: str, webid: WebId, ts: list[str]) -> list[Match]:
            chosen.add(sid)
            return search_server(dep, sid, webid, ts, query.metadata_mode, trace, picked)

        matches = propagate_query(dep.network, query.webid, terms, run)
    return SearchOutcome(rank(matches), chosen, picked)


def search(dep: Deployment, query: Query, trace: AccessTrace | None = None) -> list[RankedResult]:
    return execute(dep, query, trace).results


# --- identity binding ---------------------------------------------------------


def authorize(handle: str, ledger: dict[str, WebId]) -> WebId:
    try:
        return ledger[handle]
    except KeyError:
        raise Unauthenticated(f"no session bound to {handle!r}") from None


@dataclass
class SearchApp:
    """Front door: queries always run as the WebID bound to the caller's session."""

    deployment: Deployment
    sessions: dict[str, WebId] = field(default_factory=dict)

    def login(self, handle: str, webid: WebId) -> None:
        self.sessions[handle] = webid

    def submit(self, handle: str, terms: str | Iterable[str], claimed_webid: WebId | None = None,
               strategy: str = "direct", mode: str = "exact") -> list[RankedResult]:
        # claimed_webid is deliberately ignored
        webid = authorize(handle, self.sessions)
        return search(self.deployment, Query.make(webid, terms, strategy, mode))
