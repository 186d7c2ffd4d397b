"""Simulated overlay federation of logical tables.

Tables are fully replicated: every node maps each WebID to the metadata
locations of the servers holding a partition for it. Each registered server
also has one home node, which is the node that executes per-server work when a
query is propagated through the overlay.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from podsearch.metadata import (
    PUBLIC_PARTITION,
    AccessTrace,
    MetadataSnapshot,
    bloom_select,
)
from podsearch.model import WebId


def metadata_location(server_id: str) -> str:
    return f"https://{server_id}.espresso.invalid/metadata/"


@dataclass
class OverlayNode:
    node_id: str
    logical_table: dict[WebId, set[tuple[str, str]]] = field(default_factory=dict)
    locations: dict[str, str] = field(default_factory=dict)
    peers: set[str] = field(default_factory=set)
    home: list[str] = field(default_factory=list)

    def resolve(self, server_id: str) -> str | None:
        return self.locations.get(server_id)

    def table_dump(self) -> dict:
        return {
            "node_id": self.node_id,
            "table": {
                w: [{"server_id": s, "location": loc} for s, loc in sorted(self.logical_table[w])]
                for w in sorted(self.logical_table)
            },
        }


@dataclass
class OverlayNetwork:
    nodes: list[OverlayNode]
    snapshot: MetadataSnapshot | None = None
    registered: list[str] = field(default_factory=list)
    report: list[str] = field(default_factory=list)

    @classmethod
    def create(cls, n_nodes: int = 3) -> "OverlayNetwork":
        n_nodes = max(1, n_nodes)
        ids = [f"node{i}" for i in range(n_nodes)]
        nodes = [OverlayNode(nid) for nid in ids]
        for i, node in enumerate(nodes):
            if n_nodes > 1:
                node.peers = {ids[(i - 1) % n_nodes], ids[(i + 1) % n_nodes]}
        return cls(nodes)

    @property
    def system_metadata(self):
        return None if self.snapshot is None else self.snapshot.system

    def servers_for(self, webid: WebId, node: OverlayNode | None = None) -> set[str]:
        node = node or self.nodes[0]
        rows = node.logical_table.get(webid) or node.logical_table.get(PUBLIC_PARTITION, set())
        return {sid for sid, _ in rows}


def register_server(network: OverlayNetwork, server_id: str,
                    location: str | None = None) -> OverlayNetwork:
    if server_id in network.registered:
        network.report.append(f"duplicate-registration: {server_id}")
        return network
    location = location or metadata_location(server_id)
    for node in network.nodes:
        node.locations[server_id] = location
    home = network.nodes[len(network.registered) % len(network.nodes)]
    home.home.append(server_id)
    network.registered.append(server_id)
    return network


def publish(network: OverlayNetwork, snapshot: MetadataSnapshot) -> OverlayNetwork:
    """Attach a metadata snapshot and rebuild every node's logical table from it."""
    network.snapshot = snapshot
    rows: dict[WebId, set[tuple[str, str]]] = {}
    for sid in network.registered:
        md = snapshot.servers.get(sid)
        loc = network.nodes[0].locations[sid]
        rows.setdefault(PUBLIC_PARTITION, set()).add((sid, loc))
        if md is None:
            continue
        for webid in md.per_webid:
            rows.setdefault(webid, set()).add((sid, loc))
    for node in network.nodes:
        node.logical_table = {w: set(r) for w, r in rows.items()}
    return network


def _rank_sources(entries: list, candidates: Iterable[str]) -> list[str]:
    def score(src: str) -> int:
        return sum(e.tf_of(src) for e in entries)

    return sorted(candidates, key=lambda s: (-score(s), s))


def select_servers(network: OverlayNetwork, webid: WebId, terms: list[str], mode: str = "exact",
                   trace: AccessTrace | None = None) -> list[str]:
    """Servers matching every term for ``webid``, best first.

    Exact mode ranks by summed per-server tf from system metadata. Bloom mode
    has no exact statistics and returns the candidates in id order.
    """
    snap = network.snapshot
    if snap is None or not terms:
        return []
    candidates = set(network.registered)
    if mode == "bloom":
        for term in terms:
            candidates &= bloom_select(snap.sketches, webid, term, sorted(candidates), trace=trace)
        return sorted(candidates)
    entries = [snap.system.lookup(webid, t, trace) for t in terms]
    for e in entries:
        candidates &= e.sources
    return _rank_sources(entries, candidates)


Match = tuple[str, tuple[int, ...], str, str]  # (url, per-term tf, server, pod)


def propagate_query(network: OverlayNetwork, webid: WebId, terms: list[str],
                    execute: Callable[[str, WebId, list[str]], list[Match]]) -> list[Match]:
    """Fan (webid, terms) out to every node; each node runs ``execute`` on its home servers.

    Results are deduplicated by resource url; ranking is left to the caller.
    """
    seen: dict[str, Match] = {}
    for node in network.nodes:
        for sid in node.home:
            for match in execute(sid, webid, terms):
                seen.setdefault(match[0], match)
    return [seen[u] for u in sorted(seen)]
