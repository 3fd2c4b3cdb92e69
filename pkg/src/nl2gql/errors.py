"""Exception hierarchy shared across the package."""

from __future__ import annotations


class Nl2GqlError(Exception):
    """Base class for every error raised by this package."""


# -- graph store ------------------------------------------------------------

class ParseError(Nl2GqlError, ValueError):
    """A schema, graph, or fixture document could not be decoded."""


class SchemaError(Nl2GqlError, ValueError):
    def __init__(self, message: str, entity: str | None = None):
        super().__init__(message)
        self.entity = entity


class DataError(Nl2GqlError, ValueError):
    def __init__(self, message: str, locator: str | None = None):
        super().__init__(message)
        self.locator = locator


class UnknownEdgeType(Nl2GqlError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown edge type {self.name!r}"


# -- codegen ----------------------------------------------------------------

class UnknownKeyword(Nl2GqlError, KeyError):
    def __init__(self, keywords):
        self.keywords = sorted(keywords)
        super().__init__(", ".join(self.keywords))

    def __str__(self) -> str:
        return "unknown skeleton keyword(s): " + ", ".join(self.keywords)


# -- backends ---------------------------------------------------------------

class BackendError(Nl2GqlError):
    """Any failure while talking to a chat or embedding backend."""


class TransportError(BackendError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class RateLimited(TransportError):
    """HTTP 429 after the retry budget is exhausted."""


class FixtureMiss(BackendError, KeyError):
    def __init__(self, key: str):
        super().__init__(key)
        self.key = key

    def __str__(self) -> str:
        return f"no fixture entry for request key {self.key}"


class FixtureError(BackendError, ValueError):
    """A fixture file violates its invariants (collisions, mixed dims)."""


class EmptyInput(Nl2GqlError, ValueError):
    pass


# -- align ------------------------------------------------------------------

class DimMismatch(Nl2GqlError, ValueError):
    pass


# -- gql engine -------------------------------------------------------------

class GqlSyntaxError(Nl2GqlError):
    """Raised by the nGQL parser; this is the signal SA counts."""

    def __init__(self, message: str, position: tuple[int, int] = (1, 1),
                 expected: str | None = None, found: str | None = None):
        self.message = message
        self.position = position
        self.expected = expected
        self.found = found
        line, col = position
        super().__init__(f"{message} at line {line}, column {col}")


class SemanticError(Nl2GqlError):
    pass


class UnsupportedFeature(Nl2GqlError):
    def __init__(self, keyword: str):
        super().__init__(f"{keyword} is parsed but not executable")
        self.keyword = keyword


# -- pipeline ---------------------------------------------------------------

class ParseFailure(Nl2GqlError):
    """The ranker reply did not follow the instructed format."""


class NoQueryFound(Nl2GqlError):
    pass


class StageError(Nl2GqlError):
    """Wraps a failure inside translate with the name of the failing stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


# -- evaluation / dataset ---------------------------------------------------

class EmptyGold(Nl2GqlError, ValueError):
    pass


class GoldExecutionError(Nl2GqlError):
    def __init__(self, item_id, cause: BaseException):
        super().__init__(f"gold query of item {item_id} failed: {cause}")
        self.item_id = item_id
        self.cause = cause


class KTooLarge(Nl2GqlError, ValueError):
    pass


class InfeasibleSplit(UserWarning):
    """Holdout schemas alone exceed the test budget."""
