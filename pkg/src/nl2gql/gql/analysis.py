"""Static facts about a parsed statement: keywords used, schema names and vids referenced."""

from __future__ import annotations

from . import ast as A
from ..graph_store import GraphSchema


def _stmt_parts(stmt):
    if isinstance(stmt, A.PipeStmt):
        return [stmt.head, *stmt.stages]
    return [stmt]


def crud_keywords(stmt) -> list[str]:
    """Statement keywords in order of appearance, e.g. ``["GO", "FETCH"]`` for a piped fetch."""
    out: list[str] = []
    for part in _stmt_parts(stmt):
        if isinstance(part, (A.GoStmt, A.FetchStmt, A.LookupStmt, A.MatchStmt, A.Unsupported)):
            kw = A.statement_keyword(part)
            if kw == "OPTIONAL MATCH":
                kw = "MATCH"
            if kw not in out:
                out.append(kw)
    return out


def clause_keywords(stmt) -> list[str]:
    """Clause keywords (WHERE, LIMIT, ORDER BY, ...) in order of appearance."""
    out: list[str] = []

    def add(kw: str):
        if kw not in out:
            out.append(kw)

    for part in _stmt_parts(stmt):
        if isinstance(part, A.GoStmt):
            if part.where is not None:
                add("WHERE")
            if part.sample is not None:
                add("SAMPLE")
            if part.limit is not None or part.row_limit is not None:
                add("LIMIT")
        elif isinstance(part, A.LookupStmt):
            if part.where is not None:
                add("WHERE")
        elif isinstance(part, A.MatchStmt):
            if part.where is not None:
                add("WHERE")
            if part.order_by:
                add("ORDER BY")
            if part.skip is not None:
                add("SKIP")
            if part.limit is not None:
                add("LIMIT")
        elif isinstance(part, A.Unsupported):
            for kw in part.clauses:
                add(kw)
        elif isinstance(part, A.OrderByStage):
            add("ORDER BY")
        elif isinstance(part, A.LimitStage):
            add("LIMIT")
        elif isinstance(part, A.SkipStage):
            add("SKIP")
        elif isinstance(part, A.GroupByStage):
            add("GROUP BY")
        elif isinstance(part, A.WhereStage):
            add("WHERE")
    return out


def _exprs(part):
    if isinstance(part, A.GoStmt):
        yield from part.from_vids
        if part.where is not None:
            yield part.where
        yield from (it.expr for it in part.yield_items)
    elif isinstance(part, A.FetchStmt):
        yield from part.vids
        yield from (it.expr for it in part.yield_items)
    elif isinstance(part, A.LookupStmt):
        if part.where is not None:
            yield part.where
        yield from (it.expr for it in part.yield_items)
    elif isinstance(part, A.MatchStmt):
        for pat in part.patterns:
            for n in pat.nodes:
                yield from (v for _, v in n.props)
            for e in pat.edges:
                yield from (v for _, v in e.props)
        if part.where is not None:
            yield part.where
        yield from (it.expr for it in part.return_items)
        yield from (k.expr for k in part.order_by)
    elif isinstance(part, A.OrderByStage):
        yield from (k.expr for k in part.keys)
    elif isinstance(part, A.GroupByStage):
        yield from part.keys
        yield from (it.expr for it in part.yield_items)
    elif isinstance(part, A.YieldStage):
        yield from (it.expr for it in part.items)
    elif isinstance(part, A.WhereStage):
        yield part.predicate


def schema_names(stmt, schema: GraphSchema) -> list[str]:
    """Tag and edge names the statement mentions, in order of first mention.

    For unexecutable statements the raw identifier tokens are checked
    against the schema instead.
    """
    known = set(schema.names)
    out: list[str] = []

    def add(name: str):
        if name in known and name not in out:
            out.append(name)

    for part in _stmt_parts(stmt):
        if isinstance(part, A.GoStmt):
            for e in part.over:
                add(e)
        elif isinstance(part, (A.FetchStmt, A.LookupStmt)):
            add(part.tag)
        elif isinstance(part, A.MatchStmt):
            for pat in part.patterns:
                for i, n in enumerate(pat.nodes):
                    for label in n.labels:
                        add(label)
                    if i < len(pat.edges):
                        for t in pat.edges[i].types:
                            add(t)
        elif isinstance(part, A.Unsupported):
            for kind, text in part.tokens:
                if kind == "identifier":
                    add(text)
        for root in _exprs(part):
            for e in A.walk(root):
                if isinstance(e, A.Prop):
                    if isinstance(e.base, A.Ident):
                        add(e.base.name)
                    if isinstance(e.base, (A.Var, A.Ident)):
                        add(e.name)
    return out


def vid_literals(stmt) -> list[str]:
    """String vids written in FROM / FETCH positions."""
    out: list[str] = []
    for part in _stmt_parts(stmt):
        refs = ()
        if isinstance(part, A.GoStmt):
            refs = part.from_vids
        elif isinstance(part, A.FetchStmt):
            refs = part.vids
        for r in refs:
            if isinstance(r, A.Literal) and str(r.value) not in out:
                out.append(str(r.value))
    return out
