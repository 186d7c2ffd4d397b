"""Exception hierarchy shared by every layer of the simulator."""


class PodSearchError(Exception):
    """Base class for all simulator errors."""


class UnknownTarget(PodSearchError, KeyError):
    """A mutation or lookup named a url / id that does not exist."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class DuplicateUrl(PodSearchError):
    pass


class InvalidCorpus(PodSearchError, ValueError):
    """Corpus document failed schema validation."""


class IndexingNotAuthorized(PodSearchError):
    """The pod owner has not enabled the Indexing App for this pod."""


class StaleIndex(PodSearchError):
    pass


class StaleProfile(PodSearchError):
    pass


class StaleMetadata(PodSearchError):
    pass


class InvalidParams(PodSearchError, ValueError):
    pass


class ScopeViolation(PodSearchError, PermissionError):
    """A WebID tried to read a sketch or partition scoped to someone else."""


class AccessDenied(PodSearchError, PermissionError):
    pass


class Unauthenticated(PodSearchError, PermissionError):
    pass


class EmptyQuery(PodSearchError, ValueError):
    pass


class UnknownStrategy(PodSearchError, ValueError):
    pass


class MixedServerLog(PodSearchError, ValueError):
    pass


class IncompleteAudit(PodSearchError):
    pass


class InvalidConfig(PodSearchError, ValueError):
    pass
