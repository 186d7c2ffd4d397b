"""The simulated world: WebIDs, ACL-protected resources, pods and servers.

Everything downstream (indexes, metadata, search, audit) reads a :class:`Corpus`.
Mutations go through :func:`mutate`, which bumps the event clock, marks the
affected pod dirty and appends to the mutation log. Nothing here rebuilds
indexes; that is :func:`podsearch.index.reindex`'s job.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Union

from podsearch.errors import AccessDenied, DuplicateUrl, InvalidCorpus, UnknownTarget

WebId = str

_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not ``[0-9a-z]``.

    Duplicates are kept so callers can count term frequency.
    """
    return [t for t in _SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class AccessControlList:
    readers: frozenset[WebId] = frozenset()
    public: bool = False

    def allows(self, webid: WebId) -> bool:
        return self.public or webid in self.readers


@dataclass
class Resource:
    url: str
    text: str
    acl: AccessControlList = field(default_factory=AccessControlList)


@dataclass
class Pod:
    url: str
    owner: WebId
    resources: dict[str, Resource] = field(default_factory=dict)
    indexing_enabled: bool = True
    registered_for_search: bool = False
    # event counter of the last mutation touching this pod
    version: int = 0
    # PodIndexSet, attached by podsearch.index
    index_set: Any = None

    def add(self, resource: Resource) -> Resource:
        if not resource.url.startswith(self.url):
            raise InvalidCorpus(f"resource {resource.url!r} is not under pod {self.url!r}")
        if resource.url in self.resources:
            raise DuplicateUrl(resource.url)
        self.resources[resource.url] = resource
        return resource


@dataclass
class EspressoPod:
    """System-managed container on a server holding metadata profiles.

    Only the Search App identity reads from it, and only profiles whose pod
    owner registered the pod for search.
    """

    profiles: dict[str, Any] = field(default_factory=dict)
    authorized: set[str] = field(default_factory=set)
    server_metadata: Any = None

    def write_profile(self, profile: Any) -> None:
        self.profiles[profile.pod_url] = profile

    def drop_profile(self, pod_url: str) -> None:
        self.profiles.pop(pod_url, None)

    def readable(self, pod_url: str) -> bool:
        return pod_url in self.authorized and pod_url in self.profiles

    def read_profile(self, pod_url: str) -> Any:
        if pod_url not in self.authorized:
            raise AccessDenied(f"search app not authorized for profile of {pod_url}")
        try:
            return self.profiles[pod_url]
        except KeyError:
            raise UnknownTarget(f"no metadata profile for {pod_url}") from None


@dataclass
class Server:
    id: str
    pods: dict[str, Pod] = field(default_factory=dict)
    # None until the server is registered for search
    espresso_pod: EspressoPod | None = None

    @property
    def registered(self) -> bool:
        return self.espresso_pod is not None

    def add_pod(self, pod: Pod) -> Pod:
        if pod.url in self.pods:
            raise DuplicateUrl(pod.url)
        self.pods[pod.url] = pod
        return pod


@dataclass(frozen=True)
class VisibilityScope:
    webid: WebId
    resources: frozenset[str]

    def __contains__(self, url: object) -> bool:
        return url in self.resources

    def __len__(self) -> int:
        return len(self.resources)

    def to_json(self) -> str:
        return json.dumps({"webid": self.webid, "resources": sorted(self.resources)},
                          separators=(",", ":"))


@dataclass(frozen=True)
class MutationRecord:
    kind: str
    target: str
    timestamp: int


@dataclass
class Corpus:
    servers: dict[str, Server] = field(default_factory=dict)
    webids: set[WebId] = field(default_factory=set)
    mutation_log: list[MutationRecord] = field(default_factory=list)
    clock: int = 0
    dirty: set[str] = field(default_factory=set)

    def add_server(self, server: Server) -> Server:
        if server.id in self.servers:
            raise DuplicateUrl(server.id)
        self.servers[server.id] = server
        for pod in server.pods.values():
            self.dirty.add(pod.url)
        return server

    def iter_pods(self) -> Iterator[tuple[Server, Pod]]:
        for sid in sorted(self.servers):
            server = self.servers[sid]
            for purl in sorted(server.pods):
                yield server, server.pods[purl]

    def iter_resources(self) -> Iterator[tuple[Server, Pod, Resource]]:
        for server, pod in self.iter_pods():
            for rurl in sorted(pod.resources):
                yield server, pod, pod.resources[rurl]

    def find_pod(self, pod_url: str) -> tuple[Server, Pod]:
        for server in self.servers.values():
            pod = server.pods.get(pod_url)
            if pod is not None:
                return server, pod
        raise UnknownTarget(f"no pod {pod_url!r}")

    def find_resource(self, url: str) -> tuple[Server, Pod, Resource]:
        for server in self.servers.values():
            for pod in server.pods.values():
                res = pod.resources.get(url)
                if res is not None:
                    return server, pod, res
        raise UnknownTarget(f"no resource {url!r}")

    def has_url(self, url: str) -> bool:
        try:
            self.find_resource(url)
        except UnknownTarget:
            return False
        return True


def visibility_scope(pod: Pod, webid: WebId) -> VisibilityScope:
    return VisibilityScope(
        webid, frozenset(r.url for r in pod.resources.values() if r.acl.allows(webid))
    )


def global_visibility(corpus: Corpus, webid: WebId) -> VisibilityScope:
    urls: set[str] = set()
    for _, pod in corpus.iter_pods():
        urls |= visibility_scope(pod, webid).resources
    return VisibilityScope(webid, frozenset(urls))


# --- mutation events -------------------------------------------------------


@dataclass(frozen=True)
class AddResource:
    pod_url: str
    url: str
    text: str
    readers: frozenset[WebId] = frozenset()
    public: bool = False
    kind = "add-resource"


@dataclass(frozen=True)
class DeleteResource:
    url: str
    kind = "delete-resource"


@dataclass(frozen=True)
class GrantRead:
    url: str
    webid: WebId
    kind = "grant-read"


@dataclass(frozen=True)
class RevokeRead:
    url: str
    webid: WebId
    kind = "revoke-read"


@dataclass(frozen=True)
class SetPublic:
    url: str
    public: bool = True
    kind = "set-public"


@dataclass(frozen=True)
class RegisterServer:
    """Establish the server's ESPRESSO container (prerequisite for pod registration)."""

    server_id: str
    kind = "register-server"


@dataclass(frozen=True)
class RegisterPod:
    pod_url: str
    registered: bool = True
    kind = "register-pod"


@dataclass(frozen=True)
class SetIndexing:
    pod_url: str
    enabled: bool
    kind = "set-indexing"


Event = Union[AddResource, DeleteResource, GrantRead, RevokeRead, SetPublic,
              RegisterServer, RegisterPod, SetIndexing]


def _touch(corpus: Corpus, pod: Pod, kind: str, target: str) -> None:
    corpus.clock += 1
    pod.version = corpus.clock
    corpus.dirty.add(pod.url)
    corpus.mutation_log.append(MutationRecord(kind, target, corpus.clock))


def register_server(corpus: Corpus, server_id: str) -> bool:
    """Create the server's metadata container. Returns False if it already existed."""
    server = corpus.servers.get(server_id)
    if server is None:
        raise UnknownTarget(f"no server {server_id!r}")
    if server.espresso_pod is not None:
        return False
    server.espresso_pod = EspressoPod()
    for pod in server.pods.values():
        if pod.registered_for_search:
            server.espresso_pod.authorized.add(pod.url)
    corpus.clock += 1
    corpus.mutation_log.append(MutationRecord("register-server", server_id, corpus.clock))
    return True


def mutate(corpus: Corpus, event: Event) -> str | None:
    """Apply one event in place. Returns the url of the pod marked dirty, if any."""
    if isinstance(event, RegisterServer):
        register_server(corpus, event.server_id)
        return None
    if isinstance(event, AddResource):
        if corpus.has_url(event.url):
            raise DuplicateUrl(event.url)
        _, pod = corpus.find_pod(event.pod_url)
        pod.add(Resource(event.url, event.text,
                         AccessControlList(frozenset(event.readers), event.public)))
        corpus.webids |= set(event.readers)
        _touch(corpus, pod, event.kind, event.url)
        return pod.url
    if isinstance(event, (RegisterPod, SetIndexing)):
        server, pod = corpus.find_pod(event.pod_url)
        if isinstance(event, RegisterPod):
            if event.registered and server.espresso_pod is None:
                raise UnknownTarget(f"server {server.id!r} is not registered for search")
            pod.registered_for_search = event.registered
            if server.espresso_pod is not None:
                if event.registered:
                    server.espresso_pod.authorized.add(pod.url)
                else:
                    server.espresso_pod.authorized.discard(pod.url)
        else:
            pod.indexing_enabled = event.enabled
        _touch(corpus, pod, event.kind, pod.url)
        return pod.url

    _, pod, res = corpus.find_resource(event.url)
    if isinstance(event, DeleteResource):
        del pod.resources[res.url]
    elif isinstance(event, GrantRead):
        res.acl = AccessControlList(res.acl.readers | {event.webid}, res.acl.public)
        corpus.webids.add(event.webid)
    elif isinstance(event, RevokeRead):
        res.acl = AccessControlList(res.acl.readers - {event.webid}, res.acl.public)
    elif isinstance(event, SetPublic):
        res.acl = AccessControlList(res.acl.readers, event.public)
    else:  # pragma: no cover
        raise TypeError(f"unknown event {event!r}")
    _touch(corpus, pod, event.kind, res.url)
    return pod.url


# --- corpus file format ----------------------------------------------------

_CORPUS_KEYS = {"servers", "webids"}
_SERVER_KEYS = {"id", "pods"}
_POD_KEYS = {"url", "owner", "indexing_enabled", "registered", "resources"}
_RESOURCE_KEYS = {"url", "text", "readers", "public"}


def _check_keys(obj: Any, expected: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise InvalidCorpus(f"{where}: expected an object")
    unknown = set(obj) - expected
    missing = expected - set(obj)
    if unknown:
        raise InvalidCorpus(f"{where}: unknown fields {sorted(unknown)}")
    if missing:
        raise InvalidCorpus(f"{where}: missing fields {sorted(missing)}")


def corpus_to_dict(corpus: Corpus) -> dict:
    servers = []
    for sid in sorted(corpus.servers):
        server = corpus.servers[sid]
        pods = []
        for purl in sorted(server.pods):
            pod = server.pods[purl]
            pods.append({
                "url": pod.url,
                "owner": pod.owner,
                "indexing_enabled": pod.indexing_enabled,
                "registered": pod.registered_for_search,
                "resources": [
                    {"url": r.url, "text": r.text, "readers": sorted(r.acl.readers),
                     "public": r.acl.public}
                    for _, r in sorted(pod.resources.items())
                ],
            })
        servers.append({"id": sid, "pods": pods})
    return {"servers": servers, "webids": sorted(corpus.webids)}


def corpus_from_dict(doc: Any, registered_servers: Iterable[str] | None = None) -> Corpus:
    """Parse a corpus document.

    Servers get a metadata container if they are named in ``registered_servers``
    or host at least one pod flagged ``registered``.
    """
    _check_keys(doc, _CORPUS_KEYS, "corpus")
    corpus = Corpus(webids=set(doc["webids"]))
    if len(corpus.webids) != len(doc["webids"]):
        raise InvalidCorpus("duplicate webids")
    seen_urls: set[str] = set()
    extra = set(registered_servers or ())
    for i, sdoc in enumerate(doc["servers"]):
        _check_keys(sdoc, _SERVER_KEYS, f"servers[{i}]")
        server = Server(sdoc["id"])
        for j, pdoc in enumerate(sdoc["pods"]):
            _check_keys(pdoc, _POD_KEYS, f"servers[{i}].pods[{j}]")
            if pdoc["url"] in seen_urls:
                raise InvalidCorpus(f"duplicate url {pdoc['url']!r}")
            seen_urls.add(pdoc["url"])
            pod = Pod(pdoc["url"], pdoc["owner"], indexing_enabled=bool(pdoc["indexing_enabled"]),
                      registered_for_search=bool(pdoc["registered"]))
            for k, rdoc in enumerate(pdoc["resources"]):
                _check_keys(rdoc, _RESOURCE_KEYS, f"servers[{i}].pods[{j}].resources[{k}]")
                if rdoc["url"] in seen_urls:
                    raise InvalidCorpus(f"duplicate url {rdoc['url']!r}")
                seen_urls.add(rdoc["url"])
                pod.add(Resource(rdoc["url"], rdoc["text"],
                                 AccessControlList(frozenset(rdoc["readers"]), bool(rdoc["public"]))))
                corpus.webids |= set(rdoc["readers"])
            server.add_pod(pod)
        if sdoc["id"] in extra or any(p.registered_for_search for p in server.pods.values()):
            server.espresso_pod = EspressoPod(
                authorized={p.url for p in server.pods.values() if p.registered_for_search})
        corpus.add_server(server)
    unknown_servers = extra - set(corpus.servers)
    if unknown_servers:
        raise InvalidCorpus(f"registry names unknown servers {sorted(unknown_servers)}")
    return corpus


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(corpus_to_dict(corpus)), encoding="utf-8")


def load_corpus(path: str | Path, registered_servers: Iterable[str] | None = None) -> Corpus:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidCorpus(f"{path}: {exc}") from exc
    return corpus_from_dict(doc, registered_servers)
