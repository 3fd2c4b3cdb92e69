"""Graph schemas, instance data in the node-map / edge-map layout, and traversal.

Schema and data files are JSON documents::

    {"space": "basketball",
     "tags": [{"name": "player", "description": "...", "parent": null,
               "attrs": [{"name": "name", "dtype": "string"}]}],
     "edges": [{"name": "follow", "description": "...",
                "src_tags": ["player"], "dst_tags": ["player"], "attrs": []}]}

    {"nodes": [{"vid": "player100", "tag": "player", "attrs": {"name": "Tim Duncan"}}],
     "edges": [{"src": "player100", "dst": "player101", "etype": "follow",
                "rank": 0, "attrs": {"degree": 95}}]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Mapping

from .errors import DataError, ParseError, SchemaError, UnknownEdgeType

DTYPES = ("string", "int", "float", "bool", "timestamp")

OUTGOING = "outgoing"
REVERSED = "reversed"
BIDIRECT = "bidirect"
DIRECTIONS = (OUTGOING, REVERSED, BIDIRECT)

WILDCARD = "*"


@dataclass(frozen=True)
class AttrDef:
    name: str
    dtype: str
    description: str = ""


@dataclass(frozen=True)
class TagDef:
    name: str
    description: str = ""
    parent: str | None = None
    attrs: tuple[AttrDef, ...] = ()


@dataclass(frozen=True)
class EdgeDef:
    name: str
    description: str = ""
    src_tags: tuple[str, ...] = ()
    dst_tags: tuple[str, ...] = ()
    attrs: tuple[AttrDef, ...] = ()


@dataclass(frozen=True)
class GraphSchema:
    space_name: str
    tags: tuple[TagDef, ...] = ()
    edges: tuple[EdgeDef, ...] = ()

    def tag(self, name: str) -> TagDef | None:
        for t in self.tags:
            if t.name == name:
                return t
        return None

    def edge(self, name: str) -> EdgeDef | None:
        for e in self.edges:
            if e.name == name:
                return e
        return None

    @property
    def tag_names(self) -> list[str]:
        return [t.name for t in self.tags]

    @property
    def edge_names(self) -> list[str]:
        return [e.name for e in self.edges]

    @property
    def names(self) -> list[str]:
        return self.tag_names + self.edge_names

    def ancestors(self, tag_name: str) -> list[str]:
        """The tag itself followed by its parents, nearest first."""
        chain = []
        current = self.tag(tag_name)
        while current is not None:
            chain.append(current.name)
            current = self.tag(current.parent) if current.parent else None
        return chain

    def is_a(self, tag_name: str, ancestor: str) -> bool:
        return ancestor in self.ancestors(tag_name)

    def tag_attrs(self, tag_name: str) -> dict[str, AttrDef]:
        """All attributes visible on a tag, including inherited ones."""
        out: dict[str, AttrDef] = {}
        for name in reversed(self.ancestors(tag_name)):
            for a in self.tag(name).attrs:
                out[a.name] = a
        return out

    def edge_attrs(self, edge_name: str) -> dict[str, AttrDef]:
        e = self.edge(edge_name)
        return {a.name: a for a in e.attrs} if e else {}


@dataclass(frozen=True)
class NodeRecord:
    vid: str
    tag: str
    attrs: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class EdgeRecord:
    src: str
    dst: str
    etype: str
    rank: int = 0
    attrs: Mapping[str, Any] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.src, self.dst, self.etype, self.rank)

    def __str__(self) -> str:
        return f"{self.src}-[{self.etype}@{self.rank}]->{self.dst}"


# -- schema loading ---------------------------------------------------------

def _decode(document: str | bytes | Mapping) -> Mapping:
    if isinstance(document, Mapping):
        return document
    try:
        data = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("top-level value must be an object")
    return data


def _require(obj: Mapping, key: str, kind: type, where: str):
    if key not in obj:
        raise ParseError(f"{where}: missing key {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise ParseError(f"{where}: key {key!r} must be {kind.__name__}")
    return value


def _parse_attrs(raw, where: str) -> tuple[AttrDef, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ParseError(f"{where}: attrs must be a list")
    attrs = []
    seen = set()
    for i, a in enumerate(raw):
        if not isinstance(a, dict):
            raise ParseError(f"{where}.attrs[{i}] must be an object")
        name = _require(a, "name", str, f"{where}.attrs[{i}]")
        dtype = _require(a, "dtype", str, f"{where}.attrs[{i}]")
        if not name:
            raise SchemaError(f"{where}: empty attribute name", where)
        if name in seen:
            raise SchemaError(f"{where}: duplicate attribute {name!r}", name)
        if dtype not in DTYPES:
            raise SchemaError(f"{where}: attribute {name!r} has unknown dtype {dtype!r}", name)
        seen.add(name)
        attrs.append(AttrDef(name, dtype, a.get("description") or ""))
    return tuple(attrs)


def load_schema(document: str | bytes | Mapping) -> GraphSchema:
    """Parse and validate a schema document.

    Raises:
        ParseError: the document is not well formed.
        SchemaError: duplicate names, dangling tag references, or an
            inheritance cycle. ``exc.entity`` names the offender.
    """
    data = _decode(document)
    space = data.get("space", "")
    if not isinstance(space, str):
        raise ParseError("space must be a string")
    tags = []
    for i, t in enumerate(data.get("tags") or []):
        if not isinstance(t, dict):
            raise ParseError(f"tags[{i}] must be an object")
        name = _require(t, "name", str, f"tags[{i}]")
        parent = t.get("parent")
        if parent is not None and not isinstance(parent, str):
            raise ParseError(f"tag {name!r}: parent must be a string")
        tags.append(TagDef(name, t.get("description") or "", parent or None,
                           _parse_attrs(t.get("attrs"), f"tag {name!r}")))
    edges = []
    for i, e in enumerate(data.get("edges") or []):
        if not isinstance(e, dict):
            raise ParseError(f"edges[{i}] must be an object")
        name = _require(e, "name", str, f"edges[{i}]")
        src = _require(e, "src_tags", list, f"edge {name!r}")
        dst = _require(e, "dst_tags", list, f"edge {name!r}")
        edges.append(EdgeDef(name, e.get("description") or "", tuple(src), tuple(dst),
                             _parse_attrs(e.get("attrs"), f"edge {name!r}")))
    schema = GraphSchema(space, tuple(tags), tuple(edges))
    validate_schema(schema)
    return schema


def validate_schema(schema: GraphSchema) -> None:
    seen: set[str] = set()
    for name in schema.names:
        if not name:
            raise SchemaError("empty tag or edge name", name)
        if name in seen:
            raise SchemaError(f"duplicate schema name {name!r}", name)
        seen.add(name)
    tag_names = set(schema.tag_names)
    for t in schema.tags:
        if t.parent is not None and t.parent not in tag_names:
            raise SchemaError(f"tag {t.name!r} has undeclared parent {t.parent!r}", t.parent)
    for t in schema.tags:
        visited = {t.name}
        cur = t.parent
        while cur is not None:
            if cur in visited:
                raise SchemaError(f"inheritance cycle through tag {t.name!r}", t.name)
            visited.add(cur)
            cur = schema.tag(cur).parent
    for e in schema.edges:
        if not e.src_tags or not e.dst_tags:
            raise SchemaError(f"edge {e.name!r} needs nonempty src_tags and dst_tags", e.name)
        for ref in (*e.src_tags, *e.dst_tags):
            if ref not in tag_names:
                raise SchemaError(f"edge {e.name!r} references undeclared tag {ref!r}", ref)


def _attrs_to_json(attrs: Iterable[AttrDef]) -> list[dict]:
    out = []
    for a in attrs:
        d = {"name": a.name, "dtype": a.dtype}
        if a.description:
            d["description"] = a.description
        out.append(d)
    return out


def schema_to_dict(schema: GraphSchema) -> dict:
    return {
        "space": schema.space_name,
        "tags": [
            {"name": t.name, "description": t.description,
             **({"parent": t.parent} if t.parent else {}),
             "attrs": _attrs_to_json(t.attrs)}
            for t in schema.tags
        ],
        "edges": [
            {"name": e.name, "description": e.description,
             "src_tags": list(e.src_tags), "dst_tags": list(e.dst_tags),
             "attrs": _attrs_to_json(e.attrs)}
            for e in schema.edges
        ],
    }


def serialize_schema(schema: GraphSchema) -> str:
    return json.dumps(schema_to_dict(schema), indent=2, ensure_ascii=False)


# -- instance data ----------------------------------------------------------

def _check_value(value: Any, dtype: str) -> Any:
    """Coerce ``value`` to ``dtype`` or raise TypeError."""
    if value is None:
        return None
    if dtype == "string":
        if isinstance(value, str):
            return value
    elif dtype in ("int", "timestamp"):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif dtype == "float":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif dtype == "bool":
        if isinstance(value, bool):
            return value
    raise TypeError(f"expected {dtype}, got {type(value).__name__} {value!r}")


class GraphStore:
    """Immutable in-memory graph: nodes keyed by vid plus edge adjacency indices."""

    def __init__(self, schema: GraphSchema, nodes: Iterable[NodeRecord], edges: Iterable[EdgeRecord]):
        self.schema = schema
        self.nodes: Mapping[str, NodeRecord] = MappingProxyType({n.vid: n for n in nodes})
        self.edges: tuple[EdgeRecord, ...] = tuple(edges)
        out_index: dict[str, list[EdgeRecord]] = {vid: [] for vid in self.nodes}
        in_index: dict[str, list[EdgeRecord]] = {vid: [] for vid in self.nodes}
        for e in self.edges:
            out_index[e.src].append(e)
            in_index[e.dst].append(e)
        self.out_index: Mapping[str, tuple[EdgeRecord, ...]] = MappingProxyType(
            {k: tuple(sorted(v, key=lambda r: r.key)) for k, v in out_index.items()})
        self.in_index: Mapping[str, tuple[EdgeRecord, ...]] = MappingProxyType(
            {k: tuple(sorted(v, key=lambda r: r.key)) for k, v in in_index.items()})

    def __repr__(self) -> str:
        return f"GraphStore({self.schema.space_name!r}, nodes={len(self.nodes)}, edges={len(self.edges)})"

    def node(self, vid: str) -> NodeRecord | None:
        return self.nodes.get(vid)

    def sorted_vids(self) -> list[str]:
        return sorted(self.nodes)


def load_graph(schema: GraphSchema, document: str | bytes | Mapping) -> GraphStore:
    """Load instance data and build the adjacency indices.

    Raises:
        ParseError: the document is not well formed.
        DataError: unknown tag or edge type, dangling endpoint, duplicate
            record, or an attribute value of the wrong type.
    """
    data = _decode(document)
    raw_nodes = data.get("nodes") or []
    raw_edges = data.get("edges") or []
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise ParseError("nodes and edges must be lists")

    nodes: dict[str, NodeRecord] = {}
    for i, n in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(n, dict):
            raise ParseError(f"{where} must be an object")
        vid = _require(n, "vid", str, where)
        tag = _require(n, "tag", str, where)
        attrs = n.get("attrs") or {}
        if not isinstance(attrs, dict):
            raise ParseError(f"{where}: attrs must be an object")
        if schema.tag(tag) is None:
            raise DataError(f"{where}: unknown tag {tag!r}", where)
        if vid in nodes:
            raise DataError(f"{where}: duplicate vid {vid!r}", where)
        declared = schema.tag_attrs(tag)
        clean = {}
        for key, value in attrs.items():
            if key not in declared:
                raise DataError(f"{where}: attribute {key!r} not declared on tag {tag!r}", where)
            try:
                clean[key] = _check_value(value, declared[key].dtype)
            except TypeError as exc:
                raise DataError(f"{where}.{key}: {exc}", where) from None
        nodes[vid] = NodeRecord(vid, tag, MappingProxyType(clean))

    edges: list[EdgeRecord] = []
    keys: set[tuple] = set()
    for i, e in enumerate(raw_edges):
        where = f"edges[{i}]"
        if not isinstance(e, dict):
            raise ParseError(f"{where} must be an object")
        src = _require(e, "src", str, where)
        dst = _require(e, "dst", str, where)
        etype = _require(e, "etype", str, where)
        rank = e.get("rank", 0)
        if not isinstance(rank, int) or isinstance(rank, bool) or rank < 0:
            raise DataError(f"{where}: rank must be a nonnegative integer", where)
        edef = schema.edge(etype)
        if edef is None:
            raise DataError(f"{where}: unknown edge type {etype!r}", where)
        for end in (src, dst):
            if end not in nodes:
                raise DataError(f"{where}: endpoint {end!r} is not a loaded node", where)
        if not any(schema.is_a(nodes[src].tag, t) for t in edef.src_tags):
            raise DataError(f"{where}: source tag {nodes[src].tag!r} not allowed for {etype!r}", where)
        if not any(schema.is_a(nodes[dst].tag, t) for t in edef.dst_tags):
            raise DataError(f"{where}: destination tag {nodes[dst].tag!r} not allowed for {etype!r}", where)
        key = (src, dst, etype, rank)
        if key in keys:
            raise DataError(f"{where}: duplicate edge {key}", where)
        keys.add(key)
        attrs = e.get("attrs") or {}
        if not isinstance(attrs, dict):
            raise ParseError(f"{where}: attrs must be an object")
        declared = schema.edge_attrs(etype)
        clean = {}
        for k, value in attrs.items():
            if k not in declared:
                raise DataError(f"{where}: attribute {k!r} not declared on edge {etype!r}", where)
            try:
                clean[k] = _check_value(value, declared[k].dtype)
            except TypeError as exc:
                raise DataError(f"{where}.{k}: {exc}", where) from None
        edges.append(EdgeRecord(src, dst, etype, rank, MappingProxyType(clean)))

    return GraphStore(schema, nodes.values(), edges)


def graph_to_dict(store: GraphStore) -> dict:
    return {
        "nodes": [{"vid": n.vid, "tag": n.tag, "attrs": dict(n.attrs)} for n in store.nodes.values()],
        "edges": [{"src": e.src, "dst": e.dst, "etype": e.etype, "rank": e.rank, "attrs": dict(e.attrs)}
                  for e in store.edges],
    }


# -- traversal --------------------------------------------------------------

def path_order_key(path: tuple[tuple[EdgeRecord, bool], ...]):
    return tuple((e.key, rev) for e, rev in path)


def hops_from(store: GraphStore, vid: str, etypes, direction: str):
    """Yield (next_vid, edge, reversed_flag) for one hop out of ``vid``."""
    if direction in (OUTGOING, BIDIRECT):
        for e in store.out_index.get(vid, ()):
            if etypes is None or e.etype in etypes:
                yield e.dst, e, False
    if direction in (REVERSED, BIDIRECT):
        for e in store.in_index.get(vid, ()):
            if etypes is None or e.etype in etypes:
                if direction == BIDIRECT and e.src == e.dst:
                    continue  # a self-loop is already produced as an outgoing hop
                yield e.src, e, True


def neighbors(store: GraphStore, start: Iterable[str], etype: str | Iterable[str] = WILDCARD,
              direction: str = OUTGOING, steps: int = 1) -> list[tuple[str, list[EdgeRecord]]]:
    """Vertices reachable in exactly ``steps`` hops, each with one witnessing path.

    Walks may revisit vertices. For each reachable vid the witness is the
    lexicographically smallest path, comparing hop by hop on
    ``(src, dst, etype, rank)`` and then on whether the hop ran against the
    edge direction. Results are sorted by vid.

    ``etype`` is a single edge name, an iterable of names, or ``"*"``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if isinstance(etype, str):
        etypes = None if etype == WILDCARD else {etype}
    else:
        etypes = set(etype)
        if WILDCARD in etypes:
            etypes = None
    if etypes is not None:
        for name in etypes:
            if store.schema.edge(name) is None:
                raise UnknownEdgeType(name)

    frontier: dict[str, tuple] = {vid: () for vid in start if vid in store.nodes}
    for _ in range(steps):
        nxt: dict[str, tuple] = {}
        for vid, path in frontier.items():
            for target, edge, rev in hops_from(store, vid, etypes, direction):
                cand = path + ((edge, rev),)
                best = nxt.get(target)
                if best is None or path_order_key(cand) < path_order_key(best):
                    nxt[target] = cand
        frontier = nxt
        if not frontier:
            break
    return [(vid, [e for e, _ in frontier[vid]]) for vid in sorted(frontier)]
