"""Class-style code rendering of graph schemas and the nGQL keyword skeleton.

The rendered text is prompt context for the language models. It looks like
Python but is never imported or executed.
"""

from __future__ import annotations

import json
import keyword as keyword_module
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ParseError, UnknownKeyword
from .graph_store import AttrDef, GraphSchema

CRUD = "crud"
CLAUSE = "clause"

SCHEMA_PREAMBLE = '''\
class Tag:
    """A vertex type. Attributes are set in __init__."""


class Edge:
    """An edge type between a source tag and a destination tag."""
'''

SKELETON_PREAMBLE = '''\
class GQL:
    """nGQL keywords. Each method shows the meaning and one example statement."""
'''

_PY_TYPES = {"string": "str", "int": "int", "float": "float", "bool": "bool", "timestamp": "timestamp"}


@dataclass(frozen=True)
class SkeletonEntry:
    keyword: str
    kind: str
    meaning: str
    example: str


@dataclass(frozen=True)
class Skeleton:
    entries: tuple[SkeletonEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if not e.keyword or not e.example:
                raise ValueError(f"skeleton entry {e!r} needs a keyword and an example")
            if e.kind not in (CRUD, CLAUSE):
                raise ValueError(f"skeleton entry {e.keyword!r} has kind {e.kind!r}")
            if e.keyword in seen:
                raise ValueError(f"duplicate skeleton keyword {e.keyword!r}")
            seen.add(e.keyword)

    def lookup(self, keyword: str) -> SkeletonEntry:
        for e in self.entries:
            if e.keyword == keyword:
                return e
        raise UnknownKeyword([keyword])

    def keywords(self, kind: str | None = None) -> list[str]:
        return [e.keyword for e in self.entries if kind is None or e.kind == kind]

    def __contains__(self, keyword: str) -> bool:
        return any(e.keyword == keyword for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


_BUILTIN = [
    # CRUD keywords
    ("CREATE SPACE", CRUD, "Create a new graph database space",
     "CREATE SPACE my_graph(space_id: int, ...);"),
    ("CREATE TAG", CRUD, "Create a vertex label, defining vertex properties",
     "CREATE TAG person(name: string, age: int);"),
    ("CREATE EDGE", CRUD, "Create an edge type, defining edge properties",
     "CREATE EDGE knows(since: int);"),
    ("INSERT", CRUD, "Insert new vertices or edges into the database",
     'INSERT VERTEX person(name, age) VALUES "alice":("Alice", 30);'),
    ("GO", CRUD, "Traverse the database based on specified conditions",
     'GO FROM "alice" OVER knows YIELD $$.person.name;'),
    ("FETCH", CRUD, "Retrieve properties of vertices or edges",
     'FETCH PROP ON person "alice" YIELD person.name, person.age;'),
    ("LOOKUP", CRUD, "Index-based query operation",
     "LOOKUP ON person WHERE person.age > 25 YIELD person.name;"),
    ("MATCH", CRUD, "Match graph patterns, used for complex queries",
     "MATCH (p:person)-[:knows]->(f:person) RETURN p.person.name, f.person.name;"),
    ("UPDATE", CRUD, "Update properties of vertices or edges in the database",
     'UPDATE VERTEX "alice" SET person.age = 31;'),
    ("UPSERT", CRUD, "Insert or update operation; insert if it does not exist",
     'UPSERT VERTEX "bob" SET person.name = "Bob", person.age = 28;'),
    ("DELETE", CRUD, "Delete vertices or edges from the database",
     'DELETE VERTEX "bob";'),
    ("GET SUBGRAPH", CRUD, "Obtain a subgraph of the graph",
     'GET SUBGRAPH 2 STEPS FROM "alice" YIELD VERTICES AS friends, EDGES AS relationships;'),
    ("FIND PATH", CRUD, "Find a path between two vertices",
     'FIND SHORTEST PATH FROM "alice" TO "bob" OVER * YIELD path as p;'),
    # clause keywords
    ("GROUP BY", CLAUSE, "Group results by a variable and apply aggregation functions",
     'GO FROM "player100" OVER follow BIDIRECT YIELD $$.player.name as Name '
     '| GROUP BY $-.Name YIELD $-.Name as Player, count(*) AS Name_Count'),
    ("LIMIT", CLAUSE, "Limit the number of rows returned by a query",
     'GO FROM "player100" OVER follow REVERSELY YIELD $$.player.name AS Friend, '
     '$$.player.age AS Age | ORDER BY $-.Age, $-.Friend | LIMIT 1, 3'),
    ("SKIP", CLAUSE, "Skip a number of rows before starting to return rows from a query",
     'MATCH (v:player{name:"Tim Duncan"}) --> (v2) RETURN v2.player.name AS Name, '
     'v2.player.age AS Age ORDER BY Age DESC SKIP 1'),
    ("SAMPLE", CLAUSE, "Sample a specified list of steps in a traversal",
     'GO 3 STEPS FROM "player100" OVER * YIELD properties($$).name AS NAME, '
     'properties($$).age AS Age SAMPLE [1,2,3]'),
    ("ORDER BY", CLAUSE, "Sort the results of a query by one or more expressions",
     'FETCH PROP ON player "player100", "player101", "player102", "player103" '
     'YIELD player.age AS age, player.name AS name | ORDER BY $-.age ASC, $-.name DESC'),
    ("WHERE", CLAUSE, "Filter the results of a query based on specified conditions",
     'MATCH (v:player) WHERE v.player.name == "Tim Duncan" XOR (v.player.age < 30 AND '
     'v.player.name == "Yao Ming") OR NOT (v.player.name == "Yao Ming" OR '
     'v.player.name == "Tim Duncan") RETURN v.player.name, v.player.age'),
    ("WITH", CLAUSE, "Use the results of a match expression for further processing",
     'MATCH p=(v:player{name:"Tim Duncan"})--() WITH nodes(p) AS n UNWIND n AS n1 RETURN DISTINCT n1'),
    ("UNWIND", CLAUSE, "Expand a list and return each element as a separate row",
     "UNWIND [1,2,3] AS n RETURN n"),
]


def builtin_skeleton() -> Skeleton:
    """The nGQL catalog: 13 CRUD keywords followed by 8 clause keywords."""
    return Skeleton(tuple(SkeletonEntry(*row) for row in _BUILTIN))


def load_skeleton(document: str | bytes | Path | Iterable[Mapping]) -> Skeleton:
    """Load a skeleton override: a JSON list of {keyword, kind, meaning, example}."""
    if isinstance(document, Path):
        document = document.read_text(encoding="utf-8")
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid skeleton JSON: {exc}") from exc
    if not isinstance(document, list):
        raise ParseError("skeleton document must be a list")
    entries = []
    for i, rec in enumerate(document):
        try:
            entries.append(SkeletonEntry(rec["keyword"], rec["kind"], rec.get("meaning", ""), rec["example"]))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"skeleton entry {i}: missing {exc}") from exc
    try:
        return Skeleton(tuple(entries))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


@dataclass
class CodeSchema:
    text: str
    class_index: dict[str, tuple[int, int]] = field(default_factory=dict)

    def block(self, name: str) -> str:
        start, end = self.class_index[name]
        return self.text[start:end]


def _class_name(name: str) -> str:
    return name if name.isidentifier() else "_" + "".join(c if c.isalnum() else "_" for c in name)


def _docstring(text: str, indent: str) -> list[str]:
    body = text.replace('"""', '\\"\\"\\"').strip()
    return [f'{indent}"""{body}"""']


def _init_lines(attrs: Iterable[AttrDef], extra: list[str] | None = None) -> list[str]:
    attrs = list(attrs)
    params = ", ".join(f"{a.name}: {_PY_TYPES[a.dtype]}" for a in attrs)
    lines = [f"    def __init__(self{', ' + params if params else ''}):"]
    body = []
    for a in attrs:
        line = f"        self.{a.name} = {a.name}"
        if a.description:
            line += f"  # {a.description}"
        body.append(line)
    body.extend(extra or [])
    return lines + (body or ["        pass"])


def render_code_schema(schema: GraphSchema, only: Iterable[str] | None = None) -> CodeSchema:
    """Render tags and edges as class declarations.

    Each class carries its description as a docstring, names its parent tag
    (or ``Tag`` / ``Edge``) as base class, and lists attributes in
    ``__init__``. ``only`` restricts output to the given tag/edge names while
    keeping schema order.
    """
    keep = None if only is None else set(only)
    spans: list[tuple[str, int]] = []
    blocks: list[str] = []
    for t in schema.tags:
        if keep is not None and t.name not in keep:
            continue
        base = _class_name(t.parent) if t.parent else "Tag"
        lines = [f"class {_class_name(t.name)}({base}):"]
        lines += _docstring(t.description, "    ")
        lines += _init_lines(t.attrs)
        blocks.append("\n".join(lines) + "\n")
        spans.append((t.name, len(blocks) - 1))
    for e in schema.edges:
        if keep is not None and e.name not in keep:
            continue
        lines = [f"class {_class_name(e.name)}(Edge):"]
        lines += _docstring(e.description, "    ")
        endpoints = [
            f"        self.src = {' | '.join(_class_name(s) for s in e.src_tags)}",
            f"        self.dst = {' | '.join(_class_name(d) for d in e.dst_tags)}",
        ]
        lines += _init_lines(e.attrs, endpoints)
        blocks.append("\n".join(lines) + "\n")
        spans.append((e.name, len(blocks) - 1))

    text = SCHEMA_PREAMBLE
    index: dict[str, tuple[int, int]] = {}
    offsets = []
    for block in blocks:
        text += "\n\n"
        offsets.append((len(text), len(text) + len(block)))
        text += block
    for name, i in spans:
        index[name] = offsets[i]
    return CodeSchema(text, index)


def _method_name(keyword: str) -> str:
    name = keyword.lower().replace(" ", "_")
    return name + "_" if keyword_module.iskeyword(name) else name


def render_skeleton(skeleton: Skeleton, selected: Iterable[str] | None = None) -> str:
    """Render the selected keywords as methods on a ``GQL`` class, in skeleton order.

    ``selected=None`` renders the whole catalog.
    """
    if selected is None:
        wanted = set(skeleton.keywords())
    else:
        wanted = set(selected)
        unknown = wanted - set(skeleton.keywords())
        if unknown:
            raise UnknownKeyword(unknown)
    text = SKELETON_PREAMBLE
    for e in skeleton.entries:
        if e.keyword not in wanted:
            continue
        text += (
            f"\n    # [{e.kind}] {e.keyword}: {e.meaning}\n"
            f"    def {_method_name(e.keyword)}(self):\n"
            f"        return {json.dumps(e.example, ensure_ascii=False)}\n"
        )
    return text


def skeleton_blocks(text: str) -> list[str]:
    """Split rendered skeleton text back into its per-keyword blocks."""
    chunks = text.split("\n    # [")[1:]
    return ["    # [" + c for c in chunks]
