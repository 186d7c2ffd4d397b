import json
import random

import pytest
from hypothesis import given, strategies as st

from podsearch.errors import DuplicateUrl, InvalidCorpus, UnknownTarget
from podsearch.generate import RandomLimits, random_corpus
from podsearch.model import (
    AddResource,
    DeleteResource,
    GrantRead,
    RegisterPod,
    RevokeRead,
    SetPublic,
    corpus_from_dict,
    corpus_to_dict,
    global_visibility,
    mutate,
    tokenize,
    visibility_scope,
)
from worlds import UUID1, UUID2, UUID3, UUID4, build, visibility_pod


def urls(scope):
    return {u.rsplit("/", 1)[1] for u in scope.resources}


def p1(corpus):
    return corpus.servers["server1"].pods["P1"]


class TestVisibility:
    def test_worked_example(self):
        pod = p1(visibility_pod())
        assert urls(visibility_scope(pod, UUID1)) == {"r1", "r3"}
        assert urls(visibility_scope(pod, UUID2)) == {"r2"}
        assert urls(visibility_scope(pod, UUID4)) == set()

    def test_public_resource_visible_to_anyone(self):
        corpus = build({"s": {"P": [("doc", "x", set(), True)]}})
        pod = corpus.servers["s"].pods["P"]
        assert urls(visibility_scope(pod, "nobody-we-know")) == {"doc"}

    def test_global_visibility(self):
        assert urls(global_visibility(visibility_pod(), UUID2)) == {"r2"}

    def test_global_visibility_empty_corpus(self):
        assert global_visibility(build({}), UUID1).resources == frozenset()

    def test_global_union_across_servers(self):
        corpus = build({
            "a": {"Pa": [("x", "t", {"u"}, False)]},
            "b": {"Pb": [("y", "t", {"u"}, False), ("z", "t", {"v"}, False)]},
        })
        assert global_visibility(corpus, "u").resources == {"Pa/x", "Pb/y"}


class TestTokenize:
    @pytest.mark.parametrize("text, expected", [
        ("Treatment-Resistant Depression", ["treatment", "resistant", "depression"]),
        ("", []),
        ("diabetes, diet; diabetes", ["diabetes", "diet", "diabetes"]),
        ("  --  ", []),
        ("kwd1 KWD2", ["kwd1", "kwd2"]),
    ])
    def test_rules(self, text, expected):
        assert tokenize(text) == expected


class TestMutate:
    def test_grant_read_extends_scope(self):
        corpus = visibility_pod()
        dirty = mutate(corpus, GrantRead("P1/r2", UUID1))
        assert dirty == "P1" and "P1" in corpus.dirty
        assert urls(visibility_scope(p1(corpus), UUID1)) == {"r1", "r2", "r3"}

    def test_delete_resource(self):
        corpus = visibility_pod()
        mutate(corpus, DeleteResource("P1/r3"))
        assert urls(visibility_scope(p1(corpus), UUID3)) == set()

    def test_add_duplicate_url(self):
        corpus = visibility_pod()
        with pytest.raises(DuplicateUrl):
            mutate(corpus, AddResource("P1", "P1/r1", "again"))

    def test_unknown_target(self):
        with pytest.raises(UnknownTarget):
            mutate(visibility_pod(), RevokeRead("P1/nope", UUID1))

    def test_log_and_clock(self):
        corpus = visibility_pod()
        mutate(corpus, SetPublic("P1/r2"))
        mutate(corpus, RevokeRead("P1/r1", UUID1))
        assert [r.kind for r in corpus.mutation_log] == ["set-public", "revoke-read"]
        assert [r.timestamp for r in corpus.mutation_log] == [1, 2]
        assert p1(corpus).version == 2

    def test_register_pod_requires_server_container(self):
        corpus = visibility_pod()
        corpus.servers["server1"].espresso_pod = None
        with pytest.raises(UnknownTarget):
            mutate(corpus, RegisterPod("P1"))


class TestCorpusFile:
    def test_roundtrip(self):
        corpus = random_corpus(random.Random(3))
        doc = corpus_to_dict(corpus)
        again = corpus_to_dict(corpus_from_dict(json.loads(json.dumps(doc))))
        assert again == doc

    def test_unknown_field_rejected(self):
        doc = corpus_to_dict(visibility_pod())
        doc["servers"][0]["pods"][0]["resources"][0]["colour"] = "red"
        with pytest.raises(InvalidCorpus, match="unknown fields"):
            corpus_from_dict(doc)

    def test_missing_field_rejected(self):
        doc = corpus_to_dict(visibility_pod())
        del doc["servers"][0]["pods"][0]["owner"]
        with pytest.raises(InvalidCorpus):
            corpus_from_dict(doc)

    def test_resource_outside_pod_rejected(self):
        doc = corpus_to_dict(visibility_pod())
        doc["servers"][0]["pods"][0]["resources"][0]["url"] = "elsewhere/r1"
        with pytest.raises(InvalidCorpus):
            corpus_from_dict(doc)


# --- properties -----------------------------------------------------------

TINY = RandomLimits(servers=2, pods_per_server=3, resources_per_pod=10, webids=6)


def _random_event(rng, corpus):
    res = [r for _, _, r in corpus.iter_resources()]
    webids = sorted(corpus.webids) + ["stranger"]
    if not res:
        return None
    r = rng.choice(res)
    return rng.choice([GrantRead(r.url, rng.choice(webids)), RevokeRead(r.url, rng.choice(webids))])


@given(st.integers(0, 2**32 - 1))
def test_scope_soundness_exhaustive(seed):
    corpus = random_corpus(random.Random(seed), RandomLimits(servers=1, pods_per_server=5,
                                                             resources_per_pod=10, webids=6))
    webids = sorted(corpus.webids) + ["stranger"]
    for _, pod in corpus.iter_pods():
        for w in webids:
            scope = visibility_scope(pod, w)
            for r in pod.resources.values():
                assert (r.url in scope) == (r.acl.public or w in r.acl.readers)


@given(st.integers(0, 2**32 - 1), st.integers(1, 15))
def test_scope_monotonicity(seed, steps):
    rng = random.Random(seed)
    corpus = random_corpus(rng, TINY)
    webids = sorted(corpus.webids) + ["stranger"]
    for _ in range(steps):
        ev = _random_event(rng, corpus)
        if ev is None:
            return
        before = {w: global_visibility(corpus, w).resources for w in webids}
        mutate(corpus, ev)
        after = {w: global_visibility(corpus, w).resources for w in webids}
        for w in webids:
            if isinstance(ev, GrantRead):
                assert before[w] <= after[w]
            else:
                assert after[w] <= before[w]


@given(st.integers(0, 2**32 - 1))
def test_scope_serialization_deterministic(seed):
    a = random_corpus(random.Random(seed), TINY)
    b = random_corpus(random.Random(seed), TINY)
    for w in sorted(a.webids):
        assert global_visibility(a, w).to_json() == global_visibility(b, w).to_json()
