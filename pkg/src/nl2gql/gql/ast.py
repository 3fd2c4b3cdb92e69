"""AST node types for the nGQL subset.

Source positions are kept for error messages but excluded from equality, so
``parse(render(parse(q))) == parse(q)`` compares structure only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

Pos = tuple[int, int]


def _pos():
    return field(default=(0, 0), compare=False, repr=False)


# -- expressions ------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    kind: str  # string | int | float | bool | null
    value: Any
    pos: Pos = _pos()


@dataclass(frozen=True)
class ListExpr:
    items: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class MapExpr:
    items: tuple  # ((key, expr), ...)
    pos: Pos = _pos()


@dataclass(frozen=True)
class Ident:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Var:
    """``$$`` (destination), ``$^`` (source) or ``$-`` (piped input)."""

    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Prop:
    base: Any
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call:
    name: str  # lower-cased
    args: tuple = ()
    star: bool = False
    distinct: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary:
    op: str  # NOT | - | +
    operand: Any
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Any
    right: Any
    pos: Pos = _pos()


@dataclass(frozen=True)
class IsNull:
    operand: Any
    negated: bool = False
    pos: Pos = _pos()


Expr = Union[Literal, ListExpr, MapExpr, Ident, Var, Prop, Call, Unary, Binary, IsNull]

AGGREGATES = frozenset({"count", "sum", "min", "max", "avg", "collect"})


def walk(expr):
    """Yield ``expr`` and every sub-expression, depth first."""
    stack = [expr]
    while stack:
        e = stack.pop()
        if e is None:
            continue
        yield e
        if isinstance(e, (ListExpr,)):
            stack.extend(reversed(e.items))
        elif isinstance(e, MapExpr):
            stack.extend(reversed([v for _, v in e.items]))
        elif isinstance(e, Prop):
            stack.append(e.base)
        elif isinstance(e, Call):
            stack.extend(reversed(e.args))
        elif isinstance(e, Unary):
            stack.append(e.operand)
        elif isinstance(e, Binary):
            stack.extend([e.right, e.left])
        elif isinstance(e, IsNull):
            stack.append(e.operand)


def has_aggregate(expr) -> bool:
    return any(isinstance(e, Call) and e.name in AGGREGATES for e in walk(expr))


@dataclass(frozen=True)
class YieldItem:
    expr: Any
    alias: str | None = None


@dataclass(frozen=True)
class OrderKey:
    expr: Any
    descending: bool = False


# -- MATCH patterns -----------------------------------------------------

@dataclass(frozen=True)
class NodePattern:
    var: str | None = None
    labels: tuple[str, ...] = ()
    props: tuple = ()  # ((name, expr), ...)


@dataclass(frozen=True)
class EdgePattern:
    var: str | None = None
    types: tuple[str, ...] = ()
    props: tuple = ()
    direction: str = "right"  # right | left | both
    hops: tuple[int, int | None] | None = None  # variable-length range, unsupported on execute


@dataclass(frozen=True)
class PathPattern:
    nodes: tuple[NodePattern, ...]
    edges: tuple[EdgePattern, ...] = ()
    path_var: str | None = None


# -- statements ---------------------------------------------------------

@dataclass(frozen=True)
class GoStmt:
    steps: int
    from_vids: tuple  # literal expressions, or a single `$-.col` Prop
    over: tuple[str, ...]
    direction: str = "outgoing"  # outgoing | reversed | bidirect
    where: Any = None
    yield_items: tuple[YieldItem, ...] = ()
    distinct: bool = False
    sample: tuple[int, ...] | None = None
    limit: tuple[int, ...] | None = None  # a list caps hops per step
    row_limit: int | None = None
    implicit_yield: bool = False


@dataclass(frozen=True)
class FetchStmt:
    tag: str
    vids: tuple
    yield_items: tuple[YieldItem, ...] = ()
    distinct: bool = False
    implicit_yield: bool = False


@dataclass(frozen=True)
class LookupStmt:
    tag: str
    where: Any = None
    yield_items: tuple[YieldItem, ...] = ()
    distinct: bool = False
    implicit_yield: bool = False


@dataclass(frozen=True)
class MatchStmt:
    patterns: tuple[PathPattern, ...]
    where: Any = None
    return_items: tuple[YieldItem, ...] = ()
    distinct: bool = False
    order_by: tuple[OrderKey, ...] = ()
    skip: int | None = None
    limit: int | None = None


@dataclass(frozen=True)
class OrderByStage:
    keys: tuple[OrderKey, ...]


@dataclass(frozen=True)
class LimitStage:
    count: int
    offset: int | None = None


@dataclass(frozen=True)
class SkipStage:
    n: int


@dataclass(frozen=True)
class GroupByStage:
    keys: tuple
    yield_items: tuple[YieldItem, ...]


@dataclass(frozen=True)
class YieldStage:
    items: tuple[YieldItem, ...]
    distinct: bool = False
    keyword: str = field(default="YIELD", compare=False)


@dataclass(frozen=True)
class WhereStage:
    predicate: Any


@dataclass(frozen=True)
class PipeStmt:
    head: Any
    stages: tuple


@dataclass(frozen=True)
class Unsupported:
    """A recognised statement the embedded executor cannot run."""

    keyword: str  # the feature that blocks execution, e.g. INSERT or WITH
    head: str = ""  # statement-initial keyword(s), e.g. MATCH for MATCH ... WITH
    clauses: tuple[str, ...] = ()
    tokens: tuple[tuple[str, str], ...] = ()


Statement = Union[GoStmt, FetchStmt, LookupStmt, MatchStmt, PipeStmt, Unsupported]
PipeStage = Union[OrderByStage, LimitStage, SkipStage, GroupByStage, YieldStage, WhereStage,
                  GoStmt, FetchStmt]


def statement_keyword(stmt) -> str:
    """The CRUD keyword heading a statement (``GO``, ``MATCH``, ``INSERT``, ...)."""
    if isinstance(stmt, PipeStmt):
        return statement_keyword(stmt.head)
    if isinstance(stmt, GoStmt):
        return "GO"
    if isinstance(stmt, FetchStmt):
        return "FETCH"
    if isinstance(stmt, LookupStmt):
        return "LOOKUP"
    if isinstance(stmt, MatchStmt):
        return "MATCH"
    if isinstance(stmt, Unsupported):
        return stmt.head or stmt.keyword
    raise TypeError(f"not a statement: {stmt!r}")
