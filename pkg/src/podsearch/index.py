"""Per-pod WebID-scoped inverted indexes and the pod metadata profile.

Each pod carries one index per WebID named in some resource ACL, covering only
the non-public resources that list that WebID, plus a single public index.
Public resources are never copied into scoped indexes; :func:`lookup_postings`
unions the two at query time.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple

from podsearch.errors import IndexingNotAuthorized, StaleIndex
from podsearch.model import Corpus, Pod, Server, WebId, tokenize


class Posting(NamedTuple):
    resource_url: str
    tf: int


@dataclass
class InvertedIndex:
    # term -> resource url -> tf
    entries: dict[str, dict[str, int]] = field(default_factory=dict)

    def add_document(self, url: str, counts: Counter[str]) -> None:
        for term, tf in counts.items():
            self.entries.setdefault(term, {})[url] = tf

    def postings(self, term: str) -> set[Posting]:
        return {Posting(u, tf) for u, tf in self.entries.get(term, {}).items()}

    def terms(self) -> set[str]:
        return set(self.entries)

    def resource_urls(self) -> set[str]:
        return {u for plist in self.entries.values() for u in plist}

    def __contains__(self, term: object) -> bool:
        return term in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {
            term: [{"url": u, "tf": tf} for u, tf in sorted(plist.items())]
            for term, plist in sorted(self.entries.items())
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "InvertedIndex":
        return cls({t: {p["url"]: int(p["tf"]) for p in plist} for t, plist in doc.items()})


EMPTY_INDEX = InvertedIndex()


@dataclass
class PodIndexSet:
    pod_url: str
    scoped: dict[WebId, InvertedIndex] = field(default_factory=dict)
    public_index: InvertedIndex = field(default_factory=InvertedIndex)
    built_at: int = 0
    # non-public resources listing each WebId, and public resource count
    scope_sizes: dict[WebId, int] = field(default_factory=dict)
    public_size: int = 0

    def index_for(self, webid: WebId) -> InvertedIndex:
        return self.scoped.get(webid, EMPTY_INDEX)

    def to_dict(self) -> dict:
        return {
            "pod_url": self.pod_url,
            "built_at": self.built_at,
            "public": self.public_index.to_dict(),
            "scoped": {w: self.scoped[w].to_dict() for w in sorted(self.scoped)},
            "scope_sizes": dict(sorted(self.scope_sizes.items())),
            "public_size": self.public_size,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PodIndexSet":
        return cls(
            pod_url=doc["pod_url"],
            scoped={w: InvertedIndex.from_dict(d) for w, d in doc["scoped"].items()},
            public_index=InvertedIndex.from_dict(doc["public"]),
            built_at=int(doc["built_at"]),
            scope_sizes={w: int(n) for w, n in doc.get("scope_sizes", {}).items()},
            public_size=int(doc.get("public_size", 0)),
        )


def build_pod_index_set(pod: Pod) -> PodIndexSet:
    if not pod.indexing_enabled:
        raise IndexingNotAuthorized(pod.url)
    iset = PodIndexSet(pod.url, built_at=pod.version)
    for url in sorted(pod.resources):
        res = pod.resources[url]
        counts = Counter(tokenize(res.text))
        if res.acl.public:
            iset.public_size += 1
            iset.public_index.add_document(url, counts)
            continue
        for webid in res.acl.readers:
            iset.scope_sizes[webid] = iset.scope_sizes.get(webid, 0) + 1
            if counts:
                iset.scoped.setdefault(webid, InvertedIndex()).add_document(url, counts)
    return iset


def lookup_postings(index_set: PodIndexSet, webid: WebId, term: str) -> set[Posting]:
    """Postings visible to ``webid``: its own scoped index plus the public index."""
    return index_set.index_for(webid).postings(term) | index_set.public_index.postings(term)


class TermStats(NamedTuple):
    tf_total: int
    matching_resources: int


def _term_stats(index: InvertedIndex) -> dict[str, TermStats]:
    return {
        term: TermStats(sum(plist.values()), len(plist))
        for term, plist in sorted(index.entries.items())
    }


@dataclass
class MetadataProfile:
    pod_url: str
    per_webid: dict[WebId, dict[str, TermStats]] = field(default_factory=dict)
    public_terms: dict[str, TermStats] = field(default_factory=dict)
    built_at: int = 0
    scope_sizes: dict[WebId, int] = field(default_factory=dict)
    public_size: int = 0

    def to_dict(self) -> dict:
        def enc(stats: dict[str, TermStats]) -> dict:
            return {t: list(s) for t, s in sorted(stats.items())}

        return {
            "pod_url": self.pod_url,
            "built_at": self.built_at,
            "per_webid": {w: enc(self.per_webid[w]) for w in sorted(self.per_webid)},
            "public_terms": enc(self.public_terms),
            "scope_sizes": dict(sorted(self.scope_sizes.items())),
            "public_size": self.public_size,
        }


def build_metadata_profile(pod: Pod, index_set: PodIndexSet,
                           server: Server | None = None) -> MetadataProfile:
    """Summarise ``index_set`` and, if the server has a metadata container, deposit it there."""
    if index_set.built_at != pod.version or index_set.pod_url != pod.url:
        raise StaleIndex(f"index for {pod.url} built at {index_set.built_at}, pod at {pod.version}")
    profile = MetadataProfile(
        pod.url,
        per_webid={w: _term_stats(index_set.scoped[w]) for w in sorted(index_set.scoped)},
        public_terms=_term_stats(index_set.public_index),
        built_at=index_set.built_at,
        scope_sizes=dict(index_set.scope_sizes),
        public_size=index_set.public_size,
    )
    if server is not None and server.espresso_pod is not None:
        server.espresso_pod.write_profile(profile)
    return profile


def reindex(corpus: Corpus, pod_url: str) -> tuple[PodIndexSet, MetadataProfile]:
    """Rebuild a pod's indexes and profile from scratch and clear its dirty mark.

    A pod whose owner has not enabled indexing loses any previous index and
    profile before :class:`IndexingNotAuthorized` is raised.
    """
    server, pod = corpus.find_pod(pod_url)
    corpus.dirty.discard(pod_url)
    if not pod.indexing_enabled:
        pod.index_set = None
        if server.espresso_pod is not None:
            server.espresso_pod.drop_profile(pod_url)
        raise IndexingNotAuthorized(pod_url)
    iset = build_pod_index_set(pod)
    pod.index_set = iset
    return iset, build_metadata_profile(pod, iset, server)


def reindex_dirty(corpus: Corpus, pods: Iterable[str] | None = None) -> list[str]:
    """Reindex dirty pods (or the given ones). Returns pods skipped as unauthorised."""
    todo = sorted(corpus.dirty if pods is None else pods)
    skipped = []
    for url in todo:
        try:
            reindex(corpus, url)
        except IndexingNotAuthorized:
            skipped.append(url)
    return skipped


def index_is_current(pod: Pod) -> bool:
    iset: Any = pod.index_set
    return iset is not None and iset.built_at == pod.version
