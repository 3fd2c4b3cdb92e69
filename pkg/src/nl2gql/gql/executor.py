"""Execute parsed nGQL statements against an in-memory :class:`GraphStore`.

Semantics in brief:

* ``GO`` yields one row per distinct vertex reached in exactly N hops. The
  row is bound to the lexicographically smallest witness path among those
  whose last hop passes ``WHERE``.
* ``FETCH`` follows the written vid order and skips vids that are missing or
  carry another tag. ``LOOKUP`` scans vertices in sorted vid order.
* ``MATCH`` handles linear patterns of at most two hops. Comma-separated
  patterns are joined on shared variables.
* Predicates use three-valued logic. Comparing values of different types
  with ``==`` is false. Ordering comparisons against null yield null.
* Vertices, edges, paths, lists and maps are rendered to strings once they
  land in a result table.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Iterable

from . import ast as A
from .parser import parse
from .table import ResultTable
from ..errors import SemanticError, UnsupportedFeature
from ..graph_store import (BIDIRECT, OUTGOING, REVERSED, EdgeRecord, GraphStore, NodeRecord,
                           hops_from, path_order_key)

MAX_MATCH_HOPS = 2


# -- runtime values -----------------------------------------------------

@dataclass(frozen=True)
class VertexVal:
    node: NodeRecord


@dataclass(frozen=True)
class EdgeVal:
    edge: EdgeRecord


@dataclass(frozen=True)
class PathVal:
    vertices: tuple[NodeRecord, ...]
    edges: tuple[EdgeRecord, ...]


@dataclass(frozen=True)
class TagView:
    node: NodeRecord
    tag: str


def _fmt(v) -> str:
    """nGQL-ish literal text used when composite values are stringified."""
    if v is None:
        return "NULL"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(v[k])}" for k in sorted(v)) + "}"
    if isinstance(v, VertexVal):
        n = v.node
        return f'("{n.vid}" :{n.tag}{_fmt(dict(n.attrs))})'
    if isinstance(v, EdgeVal):
        e = v.edge
        return f'[:{e.etype} "{e.src}"->"{e.dst}" @{e.rank} {_fmt(dict(e.attrs))}]'
    if isinstance(v, PathVal):
        parts = [f'("{v.vertices[0].vid}")']
        for e, prev, n in zip(v.edges, v.vertices, v.vertices[1:]):
            forward = e.src == prev.vid and e.dst == n.vid
            arrow = f"-[:{e.etype}@{e.rank}]->" if forward else f"<-[:{e.etype}@{e.rank}]-"
            parts.append(f'{arrow}("{n.vid}")')
        return "<" + "".join(parts) + ">"
    if isinstance(v, TagView):
        return _fmt(VertexVal(v.node))
    return str(v)


def to_scalar(v):
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    return _fmt(v)


# -- typed helpers --------------------------------------------------------

def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _family(v) -> int:
    if isinstance(v, bool):
        return 0
    if _is_num(v):
        return 1
    if isinstance(v, str):
        return 2
    return 3


def sort_key(v):
    """Total order: bool < number < string < other; nulls sort last."""
    if v is None:
        return (9, 0)
    fam = _family(v)
    if fam == 1 and isinstance(v, float) and math.isnan(v):
        return (1, math.inf, 1)
    if fam == 3:
        return (3, _fmt(v))
    return (fam, v)


def identity_key(v):
    """Hashable key that keeps ``True`` apart from ``1``."""
    if isinstance(v, list):
        return ("list", tuple(identity_key(x) for x in v))
    if isinstance(v, dict):
        return ("map", tuple(sorted((k, identity_key(x)) for k, x in v.items())))
    if isinstance(v, (VertexVal, EdgeVal, PathVal, TagView)):
        return ("composite", _fmt(v))
    return (_family(v) if v is not None else 9, v)


def _equal(a, b):
    if a is None or b is None:
        return None
    if _is_num(a) and _is_num(b):
        return a == b
    if _family(a) != _family(b):
        return False
    return identity_key(a) == identity_key(b)


def _truth(v, what: str = "predicate"):
    if v is None or isinstance(v, bool):
        return v
    raise SemanticError(f"{what} must be boolean, got {_fmt(v)}")


# -- evaluation environment --------------------------------------------

@dataclass
class Env:
    store: GraphStore
    dst: NodeRecord | None = None     # $$
    src: NodeRecord | None = None     # $^
    edge: EdgeRecord | None = None    # current edge (GO)
    vertex: NodeRecord | None = None  # current vertex (FETCH / LOOKUP)
    over: tuple[str, ...] | None = None
    tag_scope: str | None = None      # FETCH/LOOKUP tag; `tag.attr` reads the current vertex
    input: dict | None = None         # $- row
    bindings: dict | None = None      # MATCH variables


class _Evaluator:
    def __init__(self, store: GraphStore):
        self.store = store
        self.schema = store.schema

    # group is a list of envs when aggregates are being computed
    def eval(self, e, env: Env, group: list[Env] | None = None):
        if isinstance(e, A.Literal):
            return e.value
        if isinstance(e, A.ListExpr):
            return [self.eval(x, env, group) for x in e.items]
        if isinstance(e, A.MapExpr):
            return {k: self.eval(v, env, group) for k, v in e.items}
        if isinstance(e, A.Var):
            return self.var(e, env)
        if isinstance(e, A.Ident):
            return self.ident(e.name, env)
        if isinstance(e, A.Prop):
            return self.prop(e, env, group)
        if isinstance(e, A.Call):
            return self.call(e, env, group)
        if isinstance(e, A.Unary):
            return self.unary(e, env, group)
        if isinstance(e, A.IsNull):
            v = self.eval(e.operand, env, group)
            return (v is not None) if e.negated else (v is None)
        if isinstance(e, A.Binary):
            return self.binary(e, env, group)
        raise SemanticError(f"cannot evaluate {e!r}")

    def var(self, e: A.Var, env: Env):
        if e.name == "$$":
            if env.dst is None:
                raise SemanticError("$$ is only defined in GO")
            return VertexVal(env.dst)
        if e.name == "$^":
            if env.src is None:
                raise SemanticError("$^ is only defined in GO")
            return VertexVal(env.src)
        if env.input is None:
            raise SemanticError("$- is only defined after a pipe")
        raise SemanticError("$- must be followed by .column")

    def ident(self, name: str, env: Env):
        if env.bindings is not None:
            if name in env.bindings:
                return env.bindings[name]
            raise SemanticError(f"variable {name!r} is not defined")
        low = name.lower()
        if low == "vertex" and env.vertex is not None:
            return VertexVal(env.vertex)
        if low == "vertex" and env.dst is not None:
            return VertexVal(env.dst)
        if low == "edge" and env.edge is not None:
            return EdgeVal(env.edge)
        raise SemanticError(f"{name!r} is not defined here")

    def prop(self, e: A.Prop, env: Env, group):
        base = e.base
        if isinstance(base, A.Var) and base.name == "$-":
            if env.input is None:
                raise SemanticError("$- is only defined after a pipe")
            if e.name not in env.input:
                raise SemanticError(f"column {e.name!r} is not produced upstream")
            return env.input[e.name]
        if isinstance(base, A.Ident) and env.bindings is None:
            low = base.name.lower()
            if not (low in ("vertex", "edge")):
                return self.schema_prop(base.name, e.name, env)
        value = self.eval(base, env, group)
        return self.member(value, e.name)

    def schema_prop(self, owner: str, attr: str, env: Env):
        """``tag.attr`` in FETCH/LOOKUP, ``edge_type.attr`` in GO."""
        schema = self.schema
        edef = schema.edge(owner)
        if edef is not None and env.edge is not None:
            if env.over is not None and "*" not in env.over and owner not in env.over:
                raise SemanticError(f"edge type {owner!r} is not in OVER")
            if attr not in schema.edge_attrs(owner):
                raise SemanticError(f"edge type {owner!r} has no attribute {attr!r}")
            return env.edge.attrs.get(attr) if env.edge.etype == owner else None
        tdef = schema.tag(owner)
        if tdef is not None and env.vertex is not None:
            if attr not in schema.tag_attrs(owner):
                raise SemanticError(f"tag {owner!r} has no attribute {attr!r}")
            if not schema.is_a(env.vertex.tag, owner):
                return None
            return env.vertex.attrs.get(attr)
        if tdef is None and edef is None:
            raise SemanticError(f"unknown tag or edge type {owner!r}")
        raise SemanticError(f"{owner}.{attr} cannot be used here")

    def member(self, value, name: str):
        schema = self.schema
        if value is None:
            return None
        if isinstance(value, TagView):
            if name not in schema.tag_attrs(value.tag):
                raise SemanticError(f"tag {value.tag!r} has no attribute {name!r}")
            if not schema.is_a(value.node.tag, value.tag):
                return None
            return value.node.attrs.get(name)
        if isinstance(value, VertexVal):
            if schema.tag(name) is not None:
                return TagView(value.node, name)
            return value.node.attrs.get(name)
        if isinstance(value, EdgeVal):
            return value.edge.attrs.get(name)
        if isinstance(value, dict):
            return value.get(name)
        raise SemanticError(f"cannot read property {name!r} of {_fmt(value)}")

    def unary(self, e: A.Unary, env, group):
        v = self.eval(e.operand, env, group)
        if e.op == "NOT":
            v = _truth(v, "NOT operand")
            return None if v is None else not v
        if v is None:
            return None
        if not _is_num(v):
            raise SemanticError(f"unary {e.op} needs a number")
        return -v if e.op == "-" else v

    def binary(self, e: A.Binary, env, group):
        op = e.op
        if op in ("AND", "OR", "XOR"):
            a = _truth(self.eval(e.left, env, group), op)
            if op == "AND" and a is False:
                return False
            if op == "OR" and a is True:
                return True
            b = _truth(self.eval(e.right, env, group), op)
            if op == "AND":
                if b is False:
                    return False
                return None if a is None or b is None else True
            if op == "OR":
                if b is True:
                    return True
                return None if a is None or b is None else False
            return None if a is None or b is None else a != b
        a = self.eval(e.left, env, group)
        b = self.eval(e.right, env, group)
        if op == "==":
            return _equal(a, b)
        if op == "!=":
            r = _equal(a, b)
            return None if r is None else not r
        if op in ("<", "<=", ">", ">="):
            if a is None or b is None:
                return None
            if not ((_is_num(a) and _is_num(b)) or (_family(a) == _family(b) and _family(a) != 3)):
                return None
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            return a >= b
        if op == "IN":
            if a is None or b is None:
                return None
            if not isinstance(b, list):
                raise SemanticError("IN needs a list on the right")
            saw_null = False
            for x in b:
                r = _equal(a, x)
                if r:
                    return True
                saw_null = saw_null or r is None
            return None if saw_null else False
        if op in ("CONTAINS", "STARTS WITH", "ENDS WITH"):
            if not (isinstance(a, str) and isinstance(b, str)):
                return None
            if op == "CONTAINS":
                return b in a
            return a.startswith(b) if op == "STARTS WITH" else a.endswith(b)
        return self.arith(op, a, b)

    def arith(self, op: str, a, b):
        if a is None or b is None:
            return None
        if op == "+" and (isinstance(a, str) or isinstance(b, str)):
            if isinstance(a, (list, dict)) or isinstance(b, (list, dict)):
                raise SemanticError("cannot concatenate a string with a collection")
            return to_text(a) + to_text(b)
        if op == "+" and isinstance(a, list) and isinstance(b, list):
            return a + b
        if not (_is_num(a) and _is_num(b)):
            raise SemanticError(f"operator {op} needs numbers")
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0:
            return None
        if op == "/":
            if isinstance(a, int) and isinstance(b, int):
                q = abs(a) // abs(b)
                return q if (a >= 0) == (b >= 0) else -q
            return a / b
        # %: sign follows the dividend
        if isinstance(a, int) and isinstance(b, int):
            r = abs(a) % abs(b)
            return r if a >= 0 else -r
        return math.fmod(a, b)

    # -- functions ------------------------------------------------------

    def call(self, e: A.Call, env: Env, group):
        if e.name in A.AGGREGATES:
            if group is None:
                raise SemanticError(f"aggregate {e.name}() is not allowed here")
            return self.aggregate(e, group)
        args = [self.eval(a, env, group) for a in e.args]
        fn = _FUNCTIONS.get(e.name)
        if fn is None:
            raise SemanticError(f"unknown function {e.name}()")
        arity, impl = fn
        if arity is not None and len(args) != arity:
            raise SemanticError(f"{e.name}() takes {arity} argument(s)")
        return impl(self, *args)

    def aggregate(self, e: A.Call, group: list[Env]):
        if e.star:
            return len(group)
        if len(e.args) != 1:
            raise SemanticError(f"{e.name}() takes one argument")
        arg = e.args[0]
        if A.has_aggregate(arg):
            raise SemanticError("aggregates cannot be nested")
        values = [self.eval(arg, env) for env in group]
        values = [v for v in values if v is not None]
        if e.distinct:
            seen, uniq = set(), []
            for v in values:
                k = identity_key(v)
                if k not in seen:
                    seen.add(k)
                    uniq.append(v)
            values = uniq
        name = e.name
        if name == "count":
            return len(values)
        if name == "collect":
            return values
        if name in ("sum", "avg"):
            if any(not _is_num(v) for v in values):
                raise SemanticError(f"{name}() needs numbers")
            if name == "sum":
                return sum(values) if values else 0
            return math.fsum(values) / len(values) if values else None
        if not values:
            return None
        best = min(values, key=sort_key) if name == "min" else max(values, key=sort_key)
        return best


def to_text(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    return _fmt(v)


def _f_id(ev, v):
    if v is None:
        return None
    if isinstance(v, (VertexVal, TagView)):
        return v.node.vid
    raise SemanticError("id() needs a vertex")


def _edge_arg(v, fname):
    if v is None:
        return None
    if not isinstance(v, EdgeVal):
        raise SemanticError(f"{fname}() needs an edge")
    return v.edge


def _f_src(ev, v):
    e = _edge_arg(v, "src")
    return None if e is None else e.src


def _f_dst(ev, v):
    e = _edge_arg(v, "dst")
    return None if e is None else e.dst


def _f_type(ev, v):
    e = _edge_arg(v, "type")
    return None if e is None else e.etype


def _f_rank(ev, v):
    e = _edge_arg(v, "rank")
    return None if e is None else e.rank


def _f_properties(ev, v):
    if v is None:
        return None
    if isinstance(v, (VertexVal, TagView)):
        return dict(v.node.attrs)
    if isinstance(v, EdgeVal):
        return dict(v.edge.attrs)
    if isinstance(v, dict):
        return dict(v)
    raise SemanticError("properties() needs a vertex or an edge")


def _f_tags(ev, v):
    if v is None:
        return None
    if not isinstance(v, (VertexVal, TagView)):
        raise SemanticError("tags() needs a vertex")
    return [v.node.tag]


def _f_size(ev, v):
    if v is None:
        return None
    if isinstance(v, (str, list, dict)):
        return len(v)
    raise SemanticError("size() needs a string, list or map")


def _f_length(ev, v):
    if v is None:
        return None
    if isinstance(v, PathVal):
        return len(v.edges)
    return _f_size(ev, v)


def _f_nodes(ev, v):
    if not isinstance(v, PathVal):
        raise SemanticError("nodes() needs a path")
    return [VertexVal(n) for n in v.vertices]


def _f_relationships(ev, v):
    if not isinstance(v, PathVal):
        raise SemanticError("relationships() needs a path")
    return [EdgeVal(e) for e in v.edges]


def _num_fn(fn):
    def impl(ev, v):
        if v is None:
            return None
        if not _is_num(v):
            raise SemanticError("numeric function needs a number")
        return fn(v)
    return impl


def _str_fn(fn):
    def impl(ev, v):
        if v is None:
            return None
        if not isinstance(v, str):
            raise SemanticError("string function needs a string")
        return fn(v)
    return impl


def _f_tostring(ev, v):
    return None if v is None else to_text(v)


def _f_tointeger(ev, v):
    if v is None:
        return None
    if _is_num(v):
        return int(v)
    if isinstance(v, str):
        try:
            return int(v.strip())
        except ValueError:
            return None
    raise SemanticError("toInteger() needs a number or string")


def _f_tofloat(ev, v):
    if v is None:
        return None
    if _is_num(v):
        return float(v)
    if isinstance(v, str):
        try:
            return float(v.strip())
        except ValueError:
            return None
    raise SemanticError("toFloat() needs a number or string")


def _f_coalesce(ev, *args):
    for a in args:
        if a is not None:
            return a
    return None


_FUNCTIONS: dict[str, tuple[int | None, Any]] = {
    "id": (1, _f_id),
    "src": (1, _f_src),
    "dst": (1, _f_dst),
    "type": (1, _f_type),
    "rank": (1, _f_rank),
    "properties": (1, _f_properties),
    "tags": (1, _f_tags),
    "labels": (1, _f_tags),
    "size": (1, _f_size),
    "length": (1, _f_length),
    "nodes": (1, _f_nodes),
    "relationships": (1, _f_relationships),
    "abs": (1, _num_fn(abs)),
    "floor": (1, _num_fn(lambda x: float(math.floor(x)))),
    "ceil": (1, _num_fn(lambda x: float(math.ceil(x)))),
    "round": (1, _num_fn(lambda x: float(math.floor(x + 0.5)))),
    "sqrt": (1, _num_fn(lambda x: math.sqrt(x) if x >= 0 else None)),
    "lower": (1, _str_fn(str.lower)),
    "tolower": (1, _str_fn(str.lower)),
    "upper": (1, _str_fn(str.upper)),
    "toupper": (1, _str_fn(str.upper)),
    "trim": (1, _str_fn(str.strip)),
    "strlen": (1, _str_fn(len)),
    "tostring": (1, _f_tostring),
    "tointeger": (1, _f_tointeger),
    "tofloat": (1, _f_tofloat),
    "coalesce": (None, _f_coalesce),
}


# -- projection ---------------------------------------------------------

def column_names(items: Iterable[A.YieldItem]) -> tuple[str, ...]:
    """Alias when given, else the positional name ``col{i}``."""
    return tuple(it.alias if it.alias else f"col{i}" for i, it in enumerate(items))


def _dedup(rows: list[tuple], extra: list | None = None):
    seen = set()
    out_rows, out_extra = [], []
    for i, row in enumerate(rows):
        k = tuple(identity_key(v) for v in row)
        if k in seen:
            continue
        seen.add(k)
        out_rows.append(row)
        if extra is not None:
            out_extra.append(extra[i])
    return out_rows, out_extra


class Executor:
    """Runs statements over one store. ``seed`` drives ``SAMPLE``."""

    def __init__(self, store: GraphStore, seed: int = 0):
        self.store = store
        self.schema = store.schema
        self.seed = seed
        self.ev = _Evaluator(store)

    # projection with implicit grouping when aggregates are present
    def project(self, items, envs: list[Env]):
        """Return (rows, row_envs); row_envs is None when rows were aggregated."""
        ev = self.ev
        if any(A.has_aggregate(it.expr) for it in items):
            key_idx = [i for i, it in enumerate(items) if not A.has_aggregate(it.expr)]
            groups: dict[tuple, list[Env]] = {}
            order: list[tuple] = []
            for env in envs:
                k = tuple(identity_key(to_scalar(ev.eval(items[i].expr, env))) for i in key_idx)
                if k not in groups:
                    groups[k] = []
                    order.append(k)
                groups[k].append(env)
            if not envs and not key_idx:
                order = [()]
                groups[()] = []
            rows = []
            for k in order:
                members = groups[k]
                first = members[0] if members else Env(self.store)
                rows.append(tuple(to_scalar(ev.eval(it.expr, first, members)) for it in items))
            return rows, None
        rows = [tuple(to_scalar(ev.eval(it.expr, env)) for it in items) for env in envs]
        return rows, list(envs)

    def sort_rows(self, rows: list[tuple], keys: list[tuple[Any, bool]]) -> list[tuple]:
        """``keys`` holds (key function over row index, descending)."""
        idx = list(range(len(rows)))
        for fn, desc in reversed(keys):
            idx.sort(key=lambda i: sort_key(fn(i)), reverse=desc)
        return [rows[i] for i in idx]

    # -- entry --------------------------------------------------------------

    def execute(self, stmt) -> ResultTable:
        if isinstance(stmt, A.Unsupported):
            raise UnsupportedFeature(stmt.keyword)
        if isinstance(stmt, A.PipeStmt):
            table = self.execute(stmt.head)
            for stage in stmt.stages:
                table = self.stage(stage, table)
            return table
        if isinstance(stmt, A.GoStmt):
            return self.go(stmt, None)
        if isinstance(stmt, A.FetchStmt):
            return self.fetch(stmt, None)
        if isinstance(stmt, A.LookupStmt):
            return self.lookup(stmt)
        if isinstance(stmt, A.MatchStmt):
            return self.match(stmt)
        raise TypeError(f"not a statement: {stmt!r}")

    # -- pipes ------------------------------------------------------------

    def _check_columns(self, exprs, columns: tuple[str, ...]):
        for root in exprs:
            for e in A.walk(root):
                if isinstance(e, A.Prop) and isinstance(e.base, A.Var) and e.base.name == "$-":
                    if e.name not in columns:
                        raise SemanticError(f"column {e.name!r} is not produced upstream "
                                            f"(have: {', '.join(columns) or 'none'})")

    def _input_envs(self, table: ResultTable) -> list[Env]:
        return [Env(self.store, input=dict(zip(table.columns, row))) for row in table.rows]

    def stage(self, st, table: ResultTable) -> ResultTable:
        ev = self.ev
        cols = table.columns
        if isinstance(st, A.OrderByStage):
            self._check_columns([k.expr for k in st.keys], cols)
            envs = self._input_envs(table)
            keys = [((lambda i, e=k.expr: ev.eval(e, envs[i])), k.descending) for k in st.keys]
            return ResultTable(cols, self.sort_rows(list(table.rows), keys))
        if isinstance(st, A.LimitStage):
            off = st.offset or 0
            return ResultTable(cols, table.rows[off:off + st.count])
        if isinstance(st, A.SkipStage):
            return ResultTable(cols, table.rows[st.n:])
        if isinstance(st, A.WhereStage):
            self._check_columns([st.predicate], cols)
            envs = self._input_envs(table)
            kept = [row for row, env in zip(table.rows, envs)
                    if _truth(ev.eval(st.predicate, env), "WHERE") is True]
            return ResultTable(cols, kept)
        if isinstance(st, A.YieldStage):
            self._check_columns([it.expr for it in st.items], cols)
            rows, _ = self.project(st.items, self._input_envs(table))
            if st.distinct:
                rows, _ = _dedup(rows)
            return ResultTable(column_names(st.items), rows)
        if isinstance(st, A.GroupByStage):
            return self.group_by(st, table)
        if isinstance(st, A.GoStmt):
            return self.go(st, table)
        if isinstance(st, A.FetchStmt):
            return self.fetch(st, table)
        raise TypeError(f"not a pipe stage: {st!r}")

    def group_by(self, st: A.GroupByStage, table: ResultTable) -> ResultTable:
        ev = self.ev
        self._check_columns(list(st.keys) + [it.expr for it in st.yield_items], table.columns)
        for it in st.yield_items:
            if not A.has_aggregate(it.expr) and it.expr not in st.keys:
                raise SemanticError("GROUP BY yields must be grouping keys or aggregates")
        groups: dict[tuple, list[Env]] = {}
        order = []
        for env in self._input_envs(table):
            k = tuple(identity_key(to_scalar(ev.eval(x, env))) for x in st.keys)
            if k not in groups:
                groups[k] = []
                order.append(k)
            groups[k].append(env)
        rows = []
        for k in order:
            members = groups[k]
            rows.append(tuple(to_scalar(ev.eval(it.expr, members[0], members)) for it in st.yield_items))
        return ResultTable(column_names(st.yield_items), rows)

    # -- GO ------------------------------------------------------------

    def _start_vids(self, refs, table: ResultTable | None) -> tuple[list[str], dict[str, dict]]:
        """Start vids plus, for piped input, the first input row per vid."""
        if len(refs) == 1 and isinstance(refs[0], A.Prop) and isinstance(refs[0].base, A.Var):
            col = refs[0].name
            if table is None:
                raise SemanticError("$- is only defined after a pipe")
            if col not in table.columns:
                raise SemanticError(f"column {col!r} is not produced upstream")
            idx = table.columns.index(col)
            out: list[str] = []
            first: dict[str, dict] = {}
            for row in table.rows:
                v = row[idx]
                if v is None:
                    continue
                vid = to_text(v)
                if vid not in first:
                    first[vid] = dict(zip(table.columns, row))
                    out.append(vid)
            return out, first
        vids = []
        for lit in refs:
            vid = to_text(lit.value)
            if vid not in vids:
                vids.append(vid)
        return vids, {}

    def go(self, s: A.GoStmt, table: ResultTable | None) -> ResultTable:
        store, schema, ev = self.store, self.schema, self.ev
        if s.over == ("*",):
            etypes = None
        else:
            for name in s.over:
                if schema.edge(name) is None:
                    raise SemanticError(f"unknown edge type {name!r}")
            etypes = set(s.over)
        direction = {"outgoing": OUTGOING, "reversed": REVERSED, "bidirect": BIDIRECT}[s.direction]
        if table is not None:
            exprs = [it.expr for it in s.yield_items] + ([s.where] if s.where is not None else [])
            self._check_columns(exprs, table.columns)
        starts, input_rows = self._start_vids(s.from_vids, table)

        rng = random.Random(self.seed)
        # frontier: vid -> (start vid, path as ((edge, reversed), ...), previous vid)
        frontier = {vid: (vid, (), vid) for vid in starts if vid in store.nodes}
        last_step = s.steps - 1
        for step in range(s.steps):
            hops = []
            for vid in sorted(frontier):
                start, path, _ = frontier[vid]
                for target, edge, rev in hops_from(store, vid, etypes, direction):
                    hops.append((target, start, path + ((edge, rev),), vid))
            hops.sort(key=lambda h: (path_order_key(h[2]), h[0]))
            if s.limit is not None and step < len(s.limit):
                hops = hops[:max(0, s.limit[step])]
            if s.sample is not None and step < len(s.sample):
                n = max(0, s.sample[step])
                if n < len(hops):
                    picked = sorted(rng.sample(range(len(hops)), n))
                    hops = [hops[i] for i in picked]
            nxt: dict[str, tuple] = {}
            for target, start, path, prev in hops:
                if step == last_step and s.where is not None:
                    env = self._go_env(s, target, path, prev, input_rows.get(start))
                    if _truth(ev.eval(s.where, env), "WHERE") is not True:
                        continue
                best = nxt.get(target)
                if best is None or path_order_key(path) < path_order_key(best[1]):
                    nxt[target] = (start, path, prev)
            frontier = nxt
            if not frontier:
                break
        envs = [self._go_env(s, vid, path, prev, input_rows.get(start))
                for vid, (start, path, prev) in sorted(frontier.items())]
        rows, _ = self.project(s.yield_items, envs)
        if s.distinct:
            rows, _ = _dedup(rows)
        if s.row_limit is not None:
            rows = rows[:s.row_limit]
        return ResultTable(column_names(s.yield_items), rows)

    def _go_env(self, s: A.GoStmt, target: str, path, prev: str, input_row) -> Env:
        nodes = self.store.nodes
        return Env(self.store, dst=nodes[target], src=nodes[prev], edge=path[-1][0],
                   over=s.over, input=input_row)

    # -- FETCH / LOOKUP ------------------------------------------------------

    def fetch(self, s: A.FetchStmt, table: ResultTable | None) -> ResultTable:
        store, schema = self.store, self.schema
        if s.tag != "*" and schema.tag(s.tag) is None:
            if schema.edge(s.tag) is not None:
                raise UnsupportedFeature("FETCH PROP ON edge")
            raise SemanticError(f"unknown tag {s.tag!r}")
        if table is not None:
            self._check_columns([it.expr for it in s.yield_items], table.columns)
        vids, input_rows = self._start_vids(s.vids, table)
        envs = []
        for vid in vids:
            node = store.nodes.get(vid)
            if node is None:
                continue
            if s.tag != "*" and not schema.is_a(node.tag, s.tag):
                continue
            envs.append(Env(store, vertex=node, tag_scope=s.tag, input=input_rows.get(vid)))
        rows, _ = self.project(s.yield_items, envs)
        if s.distinct:
            rows, _ = _dedup(rows)
        return ResultTable(column_names(s.yield_items), rows)

    def lookup(self, s: A.LookupStmt) -> ResultTable:
        store, schema, ev = self.store, self.schema, self.ev
        if schema.tag(s.tag) is None:
            if schema.edge(s.tag) is not None:
                raise UnsupportedFeature("LOOKUP ON edge")
            raise SemanticError(f"unknown tag {s.tag!r}")
        envs = []
        for vid in store.sorted_vids():
            node = store.nodes[vid]
            if not schema.is_a(node.tag, s.tag):
                continue
            env = Env(store, vertex=node, tag_scope=s.tag)
            if s.where is not None and _truth(ev.eval(s.where, env), "WHERE") is not True:
                continue
            envs.append(env)
        rows, _ = self.project(s.yield_items, envs)
        if s.distinct:
            rows, _ = _dedup(rows)
        return ResultTable(column_names(s.yield_items), rows)

    # -- MATCH ---------------------------------------------------------

    def _node_ok(self, pat: A.NodePattern, node: NodeRecord, const_env: Env) -> bool:
        schema = self.schema
        for label in pat.labels:
            if not schema.is_a(node.tag, label):
                return False
        for key, vexpr in pat.props:
            if _equal(node.attrs.get(key), self.ev.eval(vexpr, const_env)) is not True:
                return False
        return True

    def _edge_ok(self, pat: A.EdgePattern, edge: EdgeRecord, const_env: Env) -> bool:
        if pat.types and edge.etype not in pat.types:
            return False
        for key, vexpr in pat.props:
            if _equal(edge.attrs.get(key), self.ev.eval(vexpr, const_env)) is not True:
                return False
        return True

    def _edge_steps(self, pat: A.EdgePattern, vid: str):
        store = self.store
        if pat.direction == "right":
            for e in store.out_index[vid]:
                yield e, e.dst
        elif pat.direction == "left":
            for e in store.in_index[vid]:
                yield e, e.src
        else:
            for e in store.out_index[vid]:
                yield e, e.dst
            for e in store.in_index[vid]:
                if e.src != e.dst:
                    yield e, e.src

    def _check_pattern(self, pat: A.PathPattern):
        schema = self.schema
        if len(pat.edges) > MAX_MATCH_HOPS:
            raise UnsupportedFeature(f"MATCH patterns longer than {MAX_MATCH_HOPS} hops")
        for n in pat.nodes:
            for label in n.labels:
                if schema.tag(label) is None:
                    raise SemanticError(f"unknown tag {label!r}")
        for e in pat.edges:
            if e.hops is not None:
                raise UnsupportedFeature("variable-length MATCH pattern")
            for t in e.types:
                if schema.edge(t) is None:
                    raise SemanticError(f"unknown edge type {t!r}")

    def _bind(self, bindings: dict, var: str | None, value) -> dict | None:
        if var is None:
            return bindings
        if var in bindings:
            return bindings if identity_key(bindings[var]) == identity_key(value) else None
        out = dict(bindings)
        out[var] = value
        return out

    def _expand(self, pat: A.PathPattern, base: dict) -> list[dict]:
        store = self.store
        const_env = Env(store, bindings={})
        results = []

        def walk(i: int, vid: str, bindings: dict, nodes: list, edges: list):
            if i == len(pat.edges):
                b = bindings
                if pat.path_var is not None:
                    b = self._bind(b, pat.path_var, PathVal(tuple(nodes), tuple(edges)))
                    if b is None:
                        return
                results.append(b)
                return
            epat, npat = pat.edges[i], pat.nodes[i + 1]
            for edge, nxt in self._edge_steps(epat, vid):
                if any(edge.key == used.key for used in edges):
                    continue
                if not self._edge_ok(epat, edge, const_env):
                    continue
                node = store.nodes[nxt]
                if not self._node_ok(npat, node, const_env):
                    continue
                b = self._bind(bindings, epat.var, EdgeVal(edge))
                if b is None:
                    continue
                b = self._bind(b, npat.var, VertexVal(node))
                if b is None:
                    continue
                walk(i + 1, nxt, b, nodes + [node], edges + [edge])

        first = pat.nodes[0]
        for vid in store.sorted_vids():
            node = store.nodes[vid]
            if not self._node_ok(first, node, const_env):
                continue
            b = self._bind(base, first.var, VertexVal(node))
            if b is None:
                continue
            walk(0, vid, b, [node], [])
        return results

    def match(self, s: A.MatchStmt) -> ResultTable:
        ev = self.ev
        for pat in s.patterns:
            self._check_pattern(pat)
        bindings_list = [{}]
        for pat in s.patterns:
            nxt = []
            for b in bindings_list:
                nxt.extend(self._expand(pat, b))
            bindings_list = nxt
        envs = [Env(self.store, bindings=b) for b in bindings_list]
        if s.where is not None:
            envs = [env for env in envs if _truth(ev.eval(s.where, env), "WHERE") is True]
        rows, row_envs = self.project(s.return_items, envs)
        if s.distinct:
            rows, row_envs = _dedup(rows, row_envs)
        if s.order_by:
            keys = [(self._match_order_fn(k.expr, s.return_items, rows, row_envs), k.descending)
                    for k in s.order_by]
            rows = self.sort_rows(rows, keys)
        if s.skip is not None:
            rows = rows[s.skip:]
        if s.limit is not None:
            rows = rows[:s.limit]
        return ResultTable(column_names(s.return_items), rows)

    def _match_order_fn(self, expr, items, rows, row_envs):
        for i, it in enumerate(items):
            if (isinstance(expr, A.Ident) and it.alias == expr.name) or it.expr == expr:
                return lambda r, i=i: rows[r][i]
        if row_envs is None:
            raise SemanticError("ORDER BY after aggregation must name a returned column")
        if isinstance(expr, A.Ident) and any(expr.name not in env.bindings for env in row_envs):
            raise SemanticError(f"ORDER BY name {expr.name!r} is neither an alias nor a variable")
        return lambda r: to_scalar(self.ev.eval(expr, row_envs[r]))


def execute(stmt, store: GraphStore, seed: int = 0) -> ResultTable:
    """Run a parsed statement. Raises UnsupportedFeature or SemanticError."""
    return Executor(store, seed).execute(stmt)


def run(text: str, store: GraphStore, seed: int = 0) -> ResultTable:
    """Parse and execute ``text``."""
    return execute(parse(text), store, seed)


__all__ = ["execute", "run", "Executor", "sort_key", "identity_key", "to_scalar",
           "VertexVal", "EdgeVal", "PathVal"]