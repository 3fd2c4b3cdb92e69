"""AST back to nGQL text. ``parse(render(parse(q))) == parse(q)`` for every parsed ``q``."""

from __future__ import annotations

import re

from . import ast as A
from .lexer import IDENTIFIER, KEYWORDS, STRING

_PLAIN_IDENT = re.compile(r"[A-Za-z_]\w*\Z")

# binding strength, higher binds tighter
_PREC = {"OR": 1, "XOR": 2, "AND": 3, "NOT": 4,
         "==": 5, "!=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5, "IN": 5, "CONTAINS": 5,
         "STARTS WITH": 5, "ENDS WITH": 5, "IS": 5,
         "+": 6, "-": 6, "*": 7, "/": 7, "%": 7, "neg": 8}


def quote_string(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    out = out.replace("\b", "\\b").replace("\f", "\\f").replace("\0", "\\0")
    return f'"{out}"'


def name(s: str) -> str:
    if _PLAIN_IDENT.match(s) and s.upper() not in KEYWORDS:
        return s
    return f"`{s}`"


def _prop_name(s: str) -> str:
    # after '.', keywords are accepted (lower-cased) by the parser
    if _PLAIN_IDENT.match(s) and (s.upper() not in KEYWORDS or s == s.lower()):
        return s
    return f"`{s}`"


def _float(v: float) -> str:
    text = repr(float(v))
    if text in ("inf", "-inf", "nan"):
        raise ValueError(f"cannot render non-finite float {text}")
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def expr(e, parent: int = 0) -> str:
    if isinstance(e, A.Literal):
        if e.kind == "string":
            return quote_string(e.value)
        if e.kind == "bool":
            return "true" if e.value else "false"
        if e.kind == "null":
            return "NULL"
        text = _float(e.value) if e.kind == "float" else str(e.value)
        if text.startswith("-"):
            return f"({text})" if parent >= _PREC["neg"] else text
        return text
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Ident):
        return name(e.name)
    if isinstance(e, A.Prop):
        base = expr(e.base, 99)
        if not isinstance(e.base, (A.Var, A.Ident, A.Prop, A.Call)):
            base = f"({expr(e.base)})"
        return f"{base}.{_prop_name(e.name)}"
    if isinstance(e, A.Call):
        if e.star:
            return f"{e.name}(*)"
        inner = ", ".join(expr(a) for a in e.args)
        return f"{e.name}({'DISTINCT ' if e.distinct else ''}{inner})"
    if isinstance(e, A.ListExpr):
        return "[" + ", ".join(expr(x) for x in e.items) + "]"
    if isinstance(e, A.MapExpr):
        return "{" + ", ".join(f"{_prop_name(k)}: {expr(v)}" for k, v in e.items) + "}"
    if isinstance(e, A.Unary):
        if e.op == "NOT":
            if isinstance(e.operand, A.Binary) and e.operand.op == "IN":
                inner = e.operand
                text = f"{expr(inner.left, 6)} NOT IN {expr(inner.right, 6)}"
                return f"({text})" if parent > 5 else text
            text = f"NOT {expr(e.operand, _PREC['NOT'])}"
            return f"({text})" if parent > _PREC["NOT"] else text
        text = f"{e.op}{expr(e.operand, _PREC['neg'])}"
        return f"({text})" if parent > _PREC["neg"] else text
    if isinstance(e, A.IsNull):
        text = f"{expr(e.operand, 6)} IS {'NOT ' if e.negated else ''}NULL"
        return f"({text})" if parent >= 5 else text
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        # left-associative: only the right operand needs the stricter level
        text = f"{expr(e.left, p)} {e.op} {expr(e.right, p + 1)}"
        return f"({text})" if parent > p else text
    raise TypeError(f"cannot render {e!r}")


def _items(items) -> str:
    return ", ".join(expr(i.expr) + (f" AS {_prop_name(i.alias)}" if i.alias else "") for i in items)


def _order(keys) -> str:
    return ", ".join(expr(k.expr) + (" DESC" if k.descending else "") for k in keys)


def _vids(vids) -> str:
    return ", ".join(expr(v) for v in vids)


def _go(s: A.GoStmt) -> str:
    parts = ["GO"]
    if s.steps != 1:
        parts.append(f"{s.steps} STEPS")
    parts.append(f"FROM {_vids(s.from_vids)}")
    parts.append("OVER " + ("*" if s.over == ("*",) else ", ".join(name(x) for x in s.over)))
    if s.direction == "reversed":
        parts.append("REVERSELY")
    elif s.direction == "bidirect":
        parts.append("BIDIRECT")
    if s.where is not None:
        parts.append(f"WHERE {expr(s.where)}")
    if not s.implicit_yield:
        parts.append("YIELD " + ("DISTINCT " if s.distinct else "") + _items(s.yield_items))
    if s.sample is not None:
        parts.append("SAMPLE [" + ", ".join(map(str, s.sample)) + "]")
    if s.limit is not None:
        parts.append("LIMIT [" + ", ".join(map(str, s.limit)) + "]")
    elif s.row_limit is not None:
        parts.append(f"LIMIT {s.row_limit}")
    return " ".join(parts)


def _fetch(s: A.FetchStmt) -> str:
    tag = "*" if s.tag == "*" else name(s.tag)
    text = f"FETCH PROP ON {tag} {_vids(s.vids)}"
    if not s.implicit_yield:
        text += " YIELD " + ("DISTINCT " if s.distinct else "") + _items(s.yield_items)
    return text


def _lookup(s: A.LookupStmt) -> str:
    text = f"LOOKUP ON {name(s.tag)}"
    if s.where is not None:
        text += f" WHERE {expr(s.where)}"
    if not s.implicit_yield:
        text += " YIELD " + ("DISTINCT " if s.distinct else "") + _items(s.yield_items)
    return text


def _props(props) -> str:
    if not props:
        return ""
    return " {" + ", ".join(f"{_prop_name(k)}: {expr(v)}" for k, v in props) + "}"


def _node(n: A.NodePattern) -> str:
    inner = name(n.var) if n.var else ""
    inner += "".join(f":{name(l)}" for l in n.labels)
    return f"({inner}{_props(n.props)})"


def _edge(e: A.EdgePattern) -> str:
    inner = name(e.var) if e.var else ""
    if e.types:
        inner += ":" + "|".join(name(t) for t in e.types)
    if e.hops is not None:
        lo, hi = e.hops
        inner += f"*{lo}" if hi == lo else f"*{lo}..{'' if hi is None else hi}"
    inner += _props(e.props)
    body = f"-[{inner}]-" if inner else "--"
    if e.direction == "right":
        return body + ">"
    if e.direction == "left":
        return "<" + body
    return body


def _path(p: A.PathPattern) -> str:
    text = _node(p.nodes[0])
    for edge, node in zip(p.edges, p.nodes[1:]):
        text += _edge(edge) + _node(node)
    return f"{name(p.path_var)} = {text}" if p.path_var else text


def _match(s: A.MatchStmt) -> str:
    text = "MATCH " + ", ".join(_path(p) for p in s.patterns)
    if s.where is not None:
        text += f" WHERE {expr(s.where)}"
    text += " RETURN " + ("DISTINCT " if s.distinct else "") + _items(s.return_items)
    if s.order_by:
        text += " ORDER BY " + _order(s.order_by)
    if s.skip is not None:
        text += f" SKIP {s.skip}"
    if s.limit is not None:
        text += f" LIMIT {s.limit}"
    return text


def _stage(st) -> str:
    if isinstance(st, A.OrderByStage):
        return "ORDER BY " + _order(st.keys)
    if isinstance(st, A.LimitStage):
        return f"LIMIT {st.offset}, {st.count}" if st.offset is not None else f"LIMIT {st.count}"
    if isinstance(st, A.SkipStage):
        return f"SKIP {st.n}"
    if isinstance(st, A.GroupByStage):
        return "GROUP BY " + ", ".join(expr(k) for k in st.keys) + " YIELD " + _items(st.yield_items)
    if isinstance(st, A.YieldStage):
        return f"{st.keyword} " + ("DISTINCT " if st.distinct else "") + _items(st.items)
    if isinstance(st, A.WhereStage):
        return f"WHERE {expr(st.predicate)}"
    return render(st)


def _token(kind: str, text: str) -> str:
    if kind == STRING:
        return quote_string(text)
    if kind == IDENTIFIER:
        return name(text)
    return text


def _unsupported(s: A.Unsupported) -> str:
    # space-joined so adjacent symbols never fuse into a different token
    return " ".join(_token(kind, text) for kind, text in s.tokens)


def render(stmt) -> str:
    """Canonical single-line nGQL text for a statement."""
    if isinstance(stmt, A.GoStmt):
        return _go(stmt)
    if isinstance(stmt, A.FetchStmt):
        return _fetch(stmt)
    if isinstance(stmt, A.LookupStmt):
        return _lookup(stmt)
    if isinstance(stmt, A.MatchStmt):
        return _match(stmt)
    if isinstance(stmt, A.PipeStmt):
        return " | ".join([render(stmt.head)] + [_stage(s) for s in stmt.stages])
    if isinstance(stmt, A.Unsupported):
        return _unsupported(stmt)
    raise TypeError(f"not a statement: {stmt!r}")

