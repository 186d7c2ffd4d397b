"""Privacy-aware keyword search over access-controlled pods, as a deterministic simulator."""

from podsearch.model import (
    AccessControlList,
    Corpus,
    Pod,
    Resource,
    Server,
    global_visibility,
    mutate,
    tokenize,
    visibility_scope,
)
from podsearch.search import Deployment, Query, SearchApp, deploy, search

__all__ = [
    "AccessControlList", "Corpus", "Deployment", "Pod", "Query", "Resource", "SearchApp",
    "Server", "deploy", "global_visibility", "mutate", "search", "tokenize", "visibility_scope",
]
