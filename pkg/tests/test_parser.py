import random

import pytest

from nl2gql.codegen import builtin_skeleton
from nl2gql.errors import GqlSyntaxError
from nl2gql.gql import ast as A
from nl2gql.gql import analysis, is_valid, parse, render, validate

import oracle

GOLD_QUERIES = [
    "MATCH (n: character {name: 'Theseus Scamander'}) - [e: kindred {rel_type: 'fiancee'}] - (n1) return n1",
    'GO FROM "Tim Duncan" OVER like LIMIT 1',
    'GO FROM "Kristaps Porzingis" OVER like YIELD id($$) AS vid | RETURN -.vid AS dst',
    "LOOKUP ON player WHERE player.age >= 29.5 YIELD id(vertex) as name, player.age AS Age",
    'GO FROM "hepatitis C virus infection and glomerulonephritis" OVER cure_department YIELD dst(edge)',
    "GO 2 STEPS FROM 'Kobe Bryant' OVER like REVERSELY YIELD $$.player.name",
]

EXTRA_VALID = [
    'GO FROM "a", "b" OVER follow, serve BIDIRECT WHERE follow.degree > 1 YIELD DISTINCT dst(edge) AS d',
    'GO 1 TO 3 STEPS FROM "a" OVER * YIELD src(edge), dst(edge)',
    'FETCH PROP ON player "a" YIELD properties(vertex).name AS n;',
    "MATCH (a:player)<-[e:follow*1..2]-(b) WHERE a.player.age IS NOT NULL RETURN DISTINCT b ORDER BY id(b) LIMIT 5",
    'GO FROM "a" OVER follow YIELD dst(edge) AS id | GO FROM $-.id OVER follow YIELD dst(edge)',
    "GO FROM \"a\" OVER follow YIELD 1 + 2 * 3 - -4 AS x, \"it's\" AS s, [1, 2] AS l, {k: 1} AS m",
    "# comment\nLOOKUP ON team YIELD id(vertex) /* inline */ // tail",
]

INVALID = [
    "",
    "   ;",
    "GO FROM",
    "GO FROM \"a\" OVER",
    "MATCH (n RETURN n",
    'FETCH PROP ON player YIELD player.name',
    "LOOKUP ON player WHERE age >= 29.5 YIELD id(vertex) as ID, player.age as Age",
    "SELECT * FROM player",
    'GO FROM "a" OVER follow YIELD dst(edge) |',
    "GO FROM 'unterminated OVER x",
    'GO FROM "a" OVER follow; GO FROM "b" OVER follow',
]


@pytest.mark.parametrize("entry", builtin_skeleton().entries, ids=lambda e: e.keyword)
def test_skeleton_examples_validate(entry):
    assert validate(entry.example) is None


@pytest.mark.parametrize("q", GOLD_QUERIES + EXTRA_VALID)
def test_gold_and_extra_queries_validate(q):
    assert is_valid(q)


@pytest.mark.parametrize("q", INVALID)
def test_invalid_queries(q):
    err = validate(q)
    assert isinstance(err, GqlSyntaxError)
    line, col = err.position
    assert line >= 1 and col >= 1


def test_bare_attribute_error_points_at_it():
    err = validate("LOOKUP ON player WHERE age >= 29.5 YIELD id(vertex) as ID, player.age as Age")
    assert err.position == (1, 24)
    assert "age" in err.message


def test_error_position_on_second_line():
    err = validate("GO 2 STEPS FROM 'a' OVER x\nYIELD ,")
    assert err.position == (2, 7)
    assert err.found == "','"


def test_bytes_input():
    assert is_valid(b'GO FROM "a" OVER e')
    err = validate(b"GO FROM \xff")
    assert isinstance(err, GqlSyntaxError)


def test_keywords_case_insensitive():
    assert parse('go from "a" over follow yield dst(edge)') == parse('GO FROM "a" OVER follow YIELD dst(edge)')


def test_unsupported_recognised():
    stmt = parse('INSERT VERTEX person(name, age) VALUES "alice":("Alice", 30)')
    assert isinstance(stmt, A.Unsupported) and stmt.keyword == "INSERT"
    with_stmt = parse(builtin_skeleton().lookup("WITH").example)
    assert isinstance(with_stmt, A.Unsupported) and with_stmt.head == "MATCH"


def _round_trip(text):
    first = parse(text)
    again = parse(render(first))
    assert again == first, render(first)
    assert render(again) == render(first)


@pytest.mark.parametrize("q", [e.example for e in builtin_skeleton().entries] + GOLD_QUERIES + EXTRA_VALID)
def test_render_round_trip_fixed(q):
    _round_trip(q)


def test_render_round_trip_generated():
    rng = random.Random(5)
    vids = [f"p{i:02d}" for i in range(5)] + ["t00"]
    for _ in range(2000):
        _round_trip(oracle.render(oracle.random_query(rng, vids)))


def test_analysis_keywords(demo_store):
    stmt = parse('GO FROM "player101" OVER follow REVERSELY YIELD $$.player.name AS name, $$.player.age AS age'
                 " | ORDER BY $-.age DESC | LIMIT 3")
    assert analysis.crud_keywords(stmt) == ["GO"]
    assert analysis.clause_keywords(stmt) == ["ORDER BY", "LIMIT"]
    assert analysis.schema_names(stmt, demo_store.schema) == ["follow", "player"]
    assert analysis.vid_literals(stmt) == ["player101"]


@pytest.mark.parametrize("data", [
    b"(" * 65536,
    b"[" * 65536,
    b"GO FROM " + b"-" * 65000,
    b'GO FROM "a" OVER e YIELD ' + b"NOT " * 16000 + b"1",
    b"/*" * 32768,
    b"1+" * 32767 + b"1",
    b"MATCH " + b"(a)-->" * 10000 + b"(b) RETURN b",
], ids=["parens", "brackets", "minus", "not-chain", "comments", "sum", "long-pattern"])
def test_totality_on_64k_inputs(data):
    assert len(data) <= 65536
    err = validate(data)
    assert err is None or isinstance(err, GqlSyntaxError)
