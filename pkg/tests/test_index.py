import json
import random

import pytest
from hypothesis import given, strategies as st

from podsearch.audit import brute_force_index
from podsearch.errors import IndexingNotAuthorized, StaleIndex
from podsearch.generate import random_corpus
from podsearch.index import (
    Posting,
    build_metadata_profile,
    build_pod_index_set,
    lookup_postings,
    reindex,
)
from podsearch.model import AddResource, RevokeRead, SetIndexing, mutate
from worlds import build, pg2_world, UUID3, visibility_pod


def pg2_pod():
    corpus = pg2_world()
    return corpus, corpus.servers["server1"].pods["Pi"]


class TestBuild:
    def test_worked_example_partitions(self):
        _, pod = pg2_pod()
        iset = build_pod_index_set(pod)
        assert iset.scoped["U1"].terms() == {"genetic", "therapy"}
        assert iset.scoped["U2"].terms() == {"cancer", "diabetes", "diet"}
        assert len(iset.public_index) == 0

    def test_empty_pod(self):
        corpus = build({"s": {"P": []}})
        iset = build_pod_index_set(corpus.servers["s"].pods["P"])
        assert iset.scoped == {} and len(iset.public_index) == 0

    def test_public_tf(self):
        corpus = build({"s": {"P": [("doc", "cancer cancer", set(), True)]}})
        iset = build_pod_index_set(corpus.servers["s"].pods["P"])
        assert iset.public_index.postings("cancer") == {Posting("P/doc", 2)}
        assert iset.scoped == {}

    def test_public_resource_not_copied_into_scoped(self):
        corpus = build({"s": {"P": [("doc", "cancer", {"u"}, True)]}})
        iset = build_pod_index_set(corpus.servers["s"].pods["P"])
        assert "u" not in iset.scoped
        assert lookup_postings(iset, "u", "cancer") == {Posting("P/doc", 1)}

    def test_not_authorized(self):
        corpus, pod = pg2_pod()
        pod.indexing_enabled = False
        with pytest.raises(IndexingNotAuthorized):
            build_pod_index_set(pod)


class TestLookup:
    def test_other_webid_terms_invisible(self):
        _, pod = pg2_pod()
        assert lookup_postings(build_pod_index_set(pod), "U1", "cancer") == set()

    def test_own_posting(self):
        _, pod = pg2_pod()
        assert lookup_postings(build_pod_index_set(pod), "U2", "diabetes") == {Posting("Pi/r3", 1)}

    def test_unknown_webid_sees_public(self):
        corpus = build({"s": {"P": [("pub", "flu clinic", set(), True), ("priv", "flu", {"a"}, False)]}})
        iset = build_pod_index_set(corpus.servers["s"].pods["P"])
        assert lookup_postings(iset, "stranger", "flu") == {Posting("P/pub", 1)}


class TestProfile:
    def test_aggregate_counts(self):
        corpus, pod = pg2_pod()
        profile = build_metadata_profile(pod, build_pod_index_set(pod), corpus.servers["server1"])
        assert profile.per_webid["U2"]["diabetes"] == (1, 1)
        assert corpus.servers["server1"].espresso_pod.profiles["Pi"] is profile

    def test_empty_pod_profile(self):
        corpus = build({"s": {"P": []}})
        pod = corpus.servers["s"].pods["P"]
        profile = build_metadata_profile(pod, build_pod_index_set(pod))
        assert profile.per_webid == {} and profile.public_terms == {}

    def test_unregistered_profile_not_readable(self):
        corpus, pod = pg2_pod()
        espresso = corpus.servers["server1"].espresso_pod
        espresso.authorized.clear()
        pod.registered_for_search = False
        build_metadata_profile(pod, build_pod_index_set(pod), corpus.servers["server1"])
        assert "Pi" in espresso.profiles
        assert not espresso.readable("Pi")

    def test_stale_index(self):
        corpus, pod = pg2_pod()
        iset = build_pod_index_set(pod)
        mutate(corpus, RevokeRead("Pi/r1", "U1"))
        with pytest.raises(StaleIndex):
            build_metadata_profile(pod, iset)


class TestReindex:
    def test_revoke_removes_terms(self):
        corpus = visibility_pod()
        reindex(corpus, "P1")
        assert "diabetes" in corpus.servers["server1"].pods["P1"].index_set.scoped[UUID3]
        mutate(corpus, RevokeRead("P1/r3", UUID3))
        iset, _ = reindex(corpus, "P1")
        assert UUID3 not in iset.scoped
        assert "P1" not in corpus.dirty

    def test_idempotent(self):
        corpus = visibility_pod()
        a, pa = reindex(corpus, "P1")
        b, pb = reindex(corpus, "P1")
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
        assert pa.to_dict() == pb.to_dict()

    def test_add_public_doc(self):
        corpus = visibility_pod()
        reindex(corpus, "P1")
        mutate(corpus, AddResource("P1", "P1/news", "open clinic hours", public=True))
        iset, _ = reindex(corpus, "P1")
        assert {"open", "clinic", "hours"} <= iset.public_index.terms()

    def test_disabled_indexing_drops_artifacts(self):
        corpus = visibility_pod()
        reindex(corpus, "P1")
        mutate(corpus, SetIndexing("P1", False))
        with pytest.raises(IndexingNotAuthorized):
            reindex(corpus, "P1")
        assert corpus.servers["server1"].pods["P1"].index_set is None
        assert "P1" not in corpus.servers["server1"].espresso_pod.profiles


@given(st.integers(0, 2**32 - 1))
def test_oracle_equivalence_and_isolation(seed):
    corpus = random_corpus(random.Random(seed))
    for _, pod in corpus.iter_pods():
        if not pod.indexing_enabled:
            continue
        iset = build_pod_index_set(pod)
        for w in sorted(corpus.webids):
            allowed = [r for r in pod.resources.values() if w in r.acl.readers and not r.acl.public]
            assert iset.index_for(w).entries == brute_force_index((r.url, r.text) for r in allowed)
            invisible = {r.url for r in pod.resources.values() if not r.acl.allows(w)}
            assert not (iset.index_for(w).resource_urls() & invisible)
        profile = build_metadata_profile(pod, iset)
        for w, stats in profile.per_webid.items():
            for term, st_ in stats.items():
                plist = iset.scoped[w].entries[term]
                assert st_ == (sum(plist.values()), len(plist))


@given(st.integers(0, 2**32 - 1))
def test_rebuild_determinism(seed):
    corpus = random_corpus(random.Random(seed))
    for _, pod in corpus.iter_pods():
        if pod.indexing_enabled:
            a = json.dumps(reindex(corpus, pod.url)[0].to_dict(), sort_keys=True)
            b = json.dumps(reindex(corpus, pod.url)[0].to_dict(), sort_keys=True)
            assert a == b
