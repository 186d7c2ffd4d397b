"""Seeded synthetic corpora with a clinical flavour."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from podsearch.errors import InvalidConfig
from podsearch.model import AccessControlList, Corpus, EspressoPod, Pod, Resource, Server

COMMON_TERMS = (
    "patient", "visit", "notes", "summary", "referral", "clinic", "hospital", "gp",
    "prescription", "dose", "blood", "pressure", "test", "result", "scan", "follow",
    "review", "history", "allergy", "vaccine", "therapy", "diet", "exercise", "sleep",
    "pain", "cough", "fever", "headache", "nausea", "rash", "weight", "appointment",
    "discharge", "ward", "nurse", "consultant", "plan", "monitor", "stable", "improved",
)
SENSITIVE_TERMS = (
    "diabetes", "cancer", "depression", "hiv", "epilepsy", "dementia", "asthma",
    "schizophrenia", "hepatitis", "pregnancy",
)
# hidden condition -> observable terms that tend to appear alongside it
CORRELATED = {
    "depression": ("fatigue", "withdrawal", "insomnia"),
    "diabetes": ("thirst", "insulin", "glucose"),
    "dementia": ("confusion", "memory"),
}


@dataclass
class WorkbenchConfig:
    seed: int = 0
    servers: int = 3
    pods_per_server: int = 4
    resources_per_pod: int = 6
    webids: int = 5
    vocabulary_size: int = 40
    words_per_resource: int = 8
    acl_density: float = 0.3
    public_fraction: float = 0.1
    registered_fraction: float = 1.0
    indexing_fraction: float = 1.0
    target_fpr: float = 0.01
    bloom_m: int | None = None
    bloom_k: int | None = None
    nodes: int = 3
    strategy: str = "direct"
    mode: str = "exact"

    def validate(self) -> "WorkbenchConfig":
        for name in ("servers", "pods_per_server", "resources_per_pod", "webids",
                     "vocabulary_size", "words_per_resource", "nodes"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be >= 0")
        for name in ("acl_density", "public_fraction", "registered_fraction", "indexing_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1]")
        if not 0.0 < self.target_fpr < 1.0:
            raise InvalidConfig("target_fpr must be in (0, 1)")
        if (self.bloom_m is None) != (self.bloom_k is None):
            raise InvalidConfig("bloom_m and bloom_k must be given together")
        if self.bloom_m is not None and (self.bloom_m < 8 or self.bloom_k < 1):
            raise InvalidConfig("bloom_m must be >= 8 and bloom_k >= 1")
        if self.strategy not in ("direct", "propagate") or self.mode not in ("exact", "bloom"):
            raise InvalidConfig(f"bad strategy/mode {self.strategy}/{self.mode}")
        return self

    @classmethod
    def from_dict(cls, doc: dict) -> "WorkbenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys {sorted(unknown)}")
        return cls(**doc).validate()

    @classmethod
    def load(cls, path: str | Path) -> "WorkbenchConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (json.JSONDecodeError, TypeError) as exc:
            raise InvalidConfig(f"{path}: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def fixed_bloom(self) -> tuple[int, int] | None:
        return None if self.bloom_m is None else (self.bloom_m, self.bloom_k)


def vocabulary(size: int) -> list[str]:
    base = list(SENSITIVE_TERMS) + [t for ts in CORRELATED.values() for t in ts] + list(COMMON_TERMS)
    base = list(dict.fromkeys(base))
    while len(base) < size:
        base.append(f"term{len(base)}")
    return base[:size]


def webid_for(i: int) -> str:
    return f"https://id.example.org/party{i}#me"


def generate_corpus(config: WorkbenchConfig) -> Corpus:
    """Build a corpus fully determined by ``config`` (same seed, same corpus)."""
    config.validate()
    rng = random.Random(config.seed)
    vocab = vocabulary(config.vocabulary_size)
    webids = [webid_for(i) for i in range(config.webids)]
    corpus = Corpus(webids=set(webids))
    for s in range(config.servers):
        sid = f"server{s}"
        server = Server(sid, espresso_pod=EspressoPod())
        for p in range(config.pods_per_server):
            pod_url = f"https://{sid}.example.org/pod{p}/"
            owner = f"https://{sid}.example.org/pod{p}/profile#me"
            pod = Pod(pod_url, owner,
                      indexing_enabled=rng.random() < config.indexing_fraction,
                      registered_for_search=rng.random() < config.registered_fraction)
            # a pod is one patient; some carry a condition that colours all their records
            conditions = [c for c in CORRELATED if c in vocab]
            condition = rng.choice(conditions) if conditions and rng.random() < 0.3 else None
            for r in range(config.resources_per_pod):
                words = _draw_words(rng, vocab, config.words_per_resource, condition)
                public = rng.random() < config.public_fraction
                readers = frozenset(w for w in webids if rng.random() < config.acl_density)
                pod.add(Resource(f"{pod_url}doc{r}", " ".join(words),
                                 AccessControlList(readers, public)))
            server.add_pod(pod)
            if pod.registered_for_search:
                server.espresso_pod.authorized.add(pod_url)
        corpus.add_server(server)
    return corpus


def _draw_words(rng: random.Random, vocab: list[str], n: int,
                condition: str | None = None) -> list[str]:
    if not vocab or n == 0:
        return []
    words = [rng.choice(vocab) for _ in range(n)]
    if condition is not None:
        roll = rng.random()
        if roll < 0.3:
            words.append(condition)
        elif roll < 0.8:
            words.append(rng.choice(CORRELATED[condition]))
    for hidden, observable in CORRELATED.items():
        if hidden in words and rng.random() < 0.7:
            words.append(rng.choice(observable))
    return words


@dataclass
class RandomLimits:
    servers: int = 4
    pods_per_server: int = 6
    resources_per_pod: int = 20
    webids: int = 8
    vocabulary_size: int = 24
    extra: dict = field(default_factory=dict)


def random_corpus(rng: random.Random, limits: RandomLimits = RandomLimits()) -> Corpus:
    """A corpus with randomly drawn shape inside ``limits`` (for property suites)."""
    cfg = WorkbenchConfig(
        seed=rng.getrandbits(32),
        servers=rng.randint(1, limits.servers),
        pods_per_server=rng.randint(1, limits.pods_per_server),
        resources_per_pod=rng.randint(0, limits.resources_per_pod),
        webids=rng.randint(1, limits.webids),
        vocabulary_size=rng.randint(4, limits.vocabulary_size),
        words_per_resource=rng.randint(1, 6),
        acl_density=rng.choice((0.1, 0.25, 0.5, 0.8)),
        public_fraction=rng.choice((0.0, 0.1, 0.3)),
        registered_fraction=rng.choice((1.0, 1.0, 0.7)),
        indexing_fraction=rng.choice((1.0, 1.0, 0.8)),
        **limits.extra,
    )
    return generate_corpus(cfg)
