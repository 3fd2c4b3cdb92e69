"""Acceptance criteria 1-9. Each test prints one PASS/FAIL line."""

import contextlib
import functools
import io
import itertools
import json
import math
import random
import re
import signal
import socket
import string
import time
from fractions import Fraction

import numpy as np
import pytest

from nl2gql.align import char_score, levenshtein
from nl2gql.backends import HashEmbeddingBackend, RecordingBackend, ReplayBackend, ScriptedChatBackend
from nl2gql.cli import main
from nl2gql.codegen import builtin_skeleton, render_code_schema, render_skeleton
from nl2gql.dataset import coverage_radius, k_center_greedy
from nl2gql.demo import ITEMS
from nl2gql.errors import GqlSyntaxError
from nl2gql.evaluation import (EmbeddedExecutor, EvalItem, SimilarityParams, combined_similarity,
                               execution_accuracy, report_from_items, syntax_accuracy)
from nl2gql.gql import ResultTable, parse, run, validate
from nl2gql.pipeline import Backends, Pipeline, default_prompts

import oracle
from conftest import ACCEPTANCE_LINES


@contextlib.contextmanager
def criterion(number: int, title: str, budget: float | None = None):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s"
    except BaseException as exc:
        line = f"[FAIL] criterion {number}: {title} ({type(exc).__name__}: {str(exc)[:120]})"
        print(line)
        ACCEPTANCE_LINES.append(line)
        raise
    line = f"[PASS] criterion {number}: {title} ({time.perf_counter() - start:.2f}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)


# -- 1 -------------------------------------------------------------------------

_POOL = [
    ('GO FROM "player100" OVER follow YIELD dst(edge) AS d', 'GO FROM "player100" OVER follow YIELD dst(edge) AS d'),
    ('GO FROM "player100" OVER follow YIELD dst(edge) AS d', 'GO FROM "player101" OVER follow YIELD dst(edge) AS d'),
    ('GO FROM "player100" OVER follow YIELD dst(edge) AS d', "GO FROM"),
    ('GO FROM "player100" OVER follow YIELD dst(edge) AS d', 'DELETE VERTEX "player100"'),
    ("LOOKUP ON player WHERE player.age > 40 YIELD player.name AS n",
     "LOOKUP ON player WHERE player.age > 40 YIELD player.name AS n"),
    ("LOOKUP ON player WHERE player.age > 40 YIELD player.name AS n", "LOOKUP ON player WHERE age > 40"),
    ('FETCH PROP ON player "player133" YIELD player.age AS a', 'FETCH PROP ON player "player133" YIELD player.age AS a'),
    ('FETCH PROP ON player "player133" YIELD player.age AS a', ""),
]


def test_c1_metric_identity(demo_store):
    with criterion(1, "ea == sa * iea on synthetic batches and published accuracy products", budget=1.0):
        assert abs(0.5704 * 0.8956 - 0.5109) <= 1e-4
        assert abs(0.4823 * 0.8725 - 0.4208) <= 1e-4
        rng = random.Random(1)
        stores = {"demo": demo_store}
        for batch in range(60):
            picks = [rng.choice(_POOL) for _ in range(rng.randint(1, 12))]
            items = [EvalItem("q", g, gen, "demo", f"b{batch}-{i}") for i, (g, gen) in enumerate(picks)]
            sa = syntax_accuracy(items)
            ea, iea, rows = execution_accuracy(items, EmbeddedExecutor(), stores, SimilarityParams())
            report = report_from_items(rows, 0.0)
            n, v, c = report.n_total, report.n_valid, report.n_correct
            assert sa == report.sa == v / n
            assert ea == report.ea == c / n and iea == report.iea
            if v:
                assert Fraction(c, n) == Fraction(v, n) * Fraction(c, v)
                assert iea == c / v
                assert math.isclose(ea, sa * iea, rel_tol=0, abs_tol=1e-15)
            else:
                assert ea == 0.0 and iea == 0.0


# -- 2 -------------------------------------------------------------------------

CATALOG_EXAMPLES = [
    "CREATE SPACE my_graph(space_id: int, ...);",
    "CREATE TAG person(name: string, age: int);",
    "CREATE EDGE knows(since: int);",
    'INSERT VERTEX person(name, age) VALUES "alice":("Alice", 30);',
    'GO FROM "alice" OVER knows YIELD $$.person.name;',
    'FETCH PROP ON person "alice" YIELD person.name, person.age;',
    "LOOKUP ON person WHERE person.age > 25 YIELD person.name;",
    "MATCH (p:person)-[:knows]->(f:person) RETURN p.person.name, f.person.name;",
    'UPDATE VERTEX "alice" SET person.age = 31;',
    'UPSERT VERTEX "bob" SET person.name = "Bob", person.age = 28;',
    'DELETE VERTEX "bob";',
    'GET SUBGRAPH 2 STEPS FROM "alice" YIELD VERTICES AS friends, EDGES AS relationships;',
    'FIND SHORTEST PATH FROM "alice" TO "bob" OVER * YIELD path as p;',
    'GO FROM "player100" OVER follow BIDIRECT YIELD $$.player.name as Name '
    '| GROUP BY $-.Name YIELD $-.Name as Player, count(*) AS Name_Count',
    'GO FROM "player100" OVER follow REVERSELY YIELD $$.player.name AS Friend, $$.player.age AS Age '
    '| ORDER BY $-.Age, $-.Friend | LIMIT 1, 3',
    'MATCH (v:player{name:"Tim Duncan"}) --> (v2) RETURN v2.player.name AS Name, v2.player.age AS Age '
    'ORDER BY Age DESC SKIP 1',
    'GO 3 STEPS FROM "player100" OVER * YIELD properties($$).name AS NAME, properties($$).age AS Age SAMPLE [1,2,3]',
    'FETCH PROP ON player "player100", "player101", "player102", "player103" YIELD player.age AS age, '
    'player.name AS name | ORDER BY $-.age ASC, $-.name DESC',
    'MATCH (v:player) WHERE v.player.name == "Tim Duncan" XOR (v.player.age < 30 AND v.player.name == "Yao Ming") '
    'OR NOT (v.player.name == "Yao Ming" OR v.player.name == "Tim Duncan") RETURN v.player.name, v.player.age',
    'MATCH p=(v:player{name:"Tim Duncan"})--() WITH nodes(p) AS n UNWIND n AS n1 RETURN DISTINCT n1',
    "UNWIND [1,2,3] AS n RETURN n",
]

GOLD_QUERIES = [
    "MATCH (n: character {name: 'Theseus Scamander'}) - [e: kindred {rel_type: 'fiancee'}] - (n1) return n1",
    'GO FROM "Tim Duncan" OVER like LIMIT 1',
    'GO FROM "Kristaps Porzingis" OVER like YIELD id($$) AS vid | RETURN -.vid AS dst',
    "LOOKUP ON player WHERE player.age >= 29.5 YIELD id(vertex) as name, player.age AS Age",
    'GO FROM "hepatitis C virus infection and glomerulonephritis" OVER cure_department YIELD dst(edge)',
    "GO 2 STEPS FROM 'Kobe Bryant' OVER like REVERSELY YIELD $$.player.name",
]

BARE_AGE = "LOOKUP ON player WHERE age >= 29.5 YIELD id(vertex) as ID, player.age as Age"


def test_c2_parser_corpus():
    with criterion(2, "21 catalog examples and 6 gold queries validate; bare `age` rejected", budget=1.0):
        assert len(CATALOG_EXAMPLES) == 21
        assert [e.example for e in builtin_skeleton().entries] == CATALOG_EXAMPLES
        failures = [(q, validate(q)) for q in CATALOG_EXAMPLES + GOLD_QUERIES if validate(q) is not None]
        assert failures == []
        err = validate(BARE_AGE)
        assert isinstance(err, GqlSyntaxError)
        assert err.position == (1, 24)


# -- 3 -------------------------------------------------------------------------

def test_c3_executor_oracle():
    with criterion(3, "executor equals brute-force reference on 200 stores x 50 queries", budget=60.0):
        rng = random.Random(20240601)
        mismatches = []
        nonempty = 0
        for s in range(200):
            doc = oracle.random_graph(rng)
            assert len(doc["nodes"]) <= 20 and len(doc["edges"]) <= 40
            store = oracle.build_store(doc)
            ref = oracle.Reference(doc)
            vids = [n["vid"] for n in doc["nodes"]] + ["zz"]
            for _ in range(50):
                spec = oracle.random_query(rng, vids)
                text = oracle.render(spec)
                got = oracle.multiset(run(text, store).rows)
                want = oracle.multiset(ref.run(spec))
                nonempty += bool(want)
                if got != want:
                    mismatches.append((s, text))
        assert mismatches == [], mismatches[:5]
        assert nonempty > 2000  # the sweep exercises real results, not just empty tables


# -- 4 -------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _lev_rec(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(_lev_rec(a[1:], b) + 1, _lev_rec(a, b[1:]) + 1, _lev_rec(a[1:], b[1:]) + (a[0] != b[0]))


def test_c4_levenshtein_exhaustive():
    with criterion(4, "levenshtein and char_score agree with a recursive oracle over {a,b,c}^<=5", budget=30.0):
        strings = ["".join(p) for n in range(6) for p in itertools.product("abc", repeat=n)]
        assert len(strings) == 364
        for a in strings:
            for b in strings:
                assert levenshtein(a, b) == _lev_rec(a, b), (a, b)
        nonempty = strings[1:]
        for q in nonempty:
            exact = char_score(q, q)
            assert exact == 2 * len(q)
            for item in nonempty:
                if item == q:
                    continue
                value = char_score(q, item)
                assert abs(value - min(len(q), len(item)) / _lev_rec(q, item)) <= 1e-12
                assert value < exact


# -- 5 -------------------------------------------------------------------------

def _random_table(rng: random.Random) -> ResultTable:
    ncols = rng.randint(1, 4)
    cols = tuple(rng.choice(["name", "age", "d", "col0", "n", "Team"]) + str(i) for i in range(ncols))
    pool = [None, True, False, 0, 7, -3, 2.5, 1e-9, "Tim Duncan", "Spurs", "é ü", "a\tb", "", "player100"]
    rows = tuple(tuple(rng.choice(pool) if rng.random() < 0.7 else rng.randint(0, 10**6) for _ in cols)
                 for _ in range(rng.randint(0, 8)))
    return ResultTable(cols, rows)


def test_c5_combined_similarity_properties():
    with criterion(5, "combined(x, x) = 1, output in [0, 1], disjoint case 0.125"):
        rng = random.Random(5)
        tables = [_random_table(rng) for _ in range(100)]
        scorer_values = [0.0, 0.4, 1.0, -2.0, 3.0]
        for t in tables:
            assert abs(combined_similarity(t, t) - 1.0) <= 1e-9
            assert abs(combined_similarity(t, t, scorer=lambda a, b: 0.0) - 1.0) <= 1e-9
        grid = [SimilarityParams(alpha=a, beta=b) for a in (0, 0.3, 0.5, 1) for b in (0, 0.5, 1)]
        for t1, t2 in zip(tables, tables[1:] + tables[:1]):
            for params in grid:
                for sv in scorer_values:
                    v = combined_similarity(t1, t2, params, scorer=lambda a, b, sv=sv: sv)
                    assert 0.0 <= v <= 1.0
            raw_bm25 = SimilarityParams(alpha=0.0, beta=1.0, normalize_bm25=False)
            assert 0.0 <= combined_similarity(t1, t2, raw_bm25) <= 1.0
        gold = ResultTable(("name",), (("Tony Parker",),))
        other = ResultTable(("vid",), (("player999",),))
        assert abs(combined_similarity(gold, other) - 0.125) <= 1e-9


# -- 6 -------------------------------------------------------------------------

def _greedy_reference(points, k, first):
    """Greedy farthest-point by definition, exact integer arithmetic, lowest index on ties."""
    def d2(i, j):
        return sum((x - y) ** 2 for x, y in zip(points[i], points[j]))

    chosen = [first]
    while len(chosen) < k:
        best = max((i for i in range(len(points)) if i not in chosen),
                   key=lambda i: (min(d2(i, j) for j in chosen), -i))
        chosen.append(best)
    return chosen


def test_c6_k_center_greedy():
    with criterion(6, "K-Center Greedy equals brute force (n<=8, k<=4) and radius is monotone", budget=30.0):
        checked = 0
        # every 1-D configuration over {0, 1, 2} up to n = 8, ties included
        for n in range(1, 9):
            for coords in itertools.product(range(3), repeat=n):
                pts = [(c,) for c in coords]
                norms = [p[0] ** 2 for p in pts]
                first_norm = norms.index(max(norms))
                for k in range(1, min(4, n) + 1):
                    assert k_center_greedy(pts, k, "first_index") == _greedy_reference(pts, k, 0)
                    assert k_center_greedy(pts, k, "max_norm") == _greedy_reference(pts, k, first_norm)
                    checked += 2
        rng = random.Random(6)
        for _ in range(1000):
            n = rng.randint(1, 8)
            pts = [(rng.randint(-3, 3), rng.randint(-3, 3)) for _ in range(n)]
            norms = [x * x + y * y for x, y in pts]
            for k in range(1, min(4, n) + 1):
                assert k_center_greedy(pts, k, "first_index") == _greedy_reference(pts, k, 0)
                assert k_center_greedy(pts, k, "max_norm") == _greedy_reference(pts, k, norms.index(max(norms)))
        assert checked > 50000
        for _ in range(1000):
            n = rng.randint(1, 30)
            vecs = np.random.default_rng(rng.randrange(2**32)).normal(size=(n, rng.randint(1, 5)))
            init = rng.choice(["max_norm", "first_index"])
            full = k_center_greedy(vecs, n, init)
            radii = [coverage_radius(vecs, full[:k]) for k in range(1, n + 1)]
            assert all(b <= a + 1e-12 for a, b in zip(radii, radii[1:]))
            assert radii[-1] == 0.0
            for k in range(1, n + 1):
                assert k_center_greedy(vecs, k, init) == full[:k]


# -- 7 -------------------------------------------------------------------------

@pytest.fixture
def no_network(monkeypatch):
    def refuse(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)


def _capture(argv) -> str:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        assert main(argv) == 0, argv
    return buf.getvalue()


def _demo_run(demo_dir) -> tuple[bytes, dict]:
    cfg = str(demo_dir / "config.json")
    out = []
    for item in ITEMS:
        trace = _capture(["translate", item.nl, "--trace", "--config", cfg])
        out.append(trace)
        out.append(_capture(["exec", json.loads(trace)["gql"], "--config", cfg]))
    report = _capture(["eval", str(demo_dir / "eval.jsonl"), "--config", cfg, "--format", "json"])
    out.append(report)
    return "".join(out).encode("utf-8"), json.loads(report)


def test_c7_replay_determinism(demo_dir, no_network):
    with criterion(7, "demo translate -> exec -> eval twice, byte-identical, SA 1.0 and IEA 11/12", budget=5.0):
        first, report = _demo_run(demo_dir)
        second, _ = _demo_run(demo_dir)
        assert first == second
        assert report["sa"] == 1.0
        assert report["iea"] == 11 / 12
        assert report["ea"] == 11 / 12
        assert report["n_total"] == 12


# -- 8 -------------------------------------------------------------------------

HALLUCINATED = ["character", "kindred", "like", "cure_department", "coach", "teammate", "plays_for", "fan_of",
                "franchise", "arena", "sponsor", "league", "jersey_number", "mentor", "rival", "drafted_by",
                "stadium", "player_info", "serve_team", "followee", "playerr", "TEAMMATE", "Coach"]
DOTTED = ["Player.height", "team.city", "coach.name", "serve.salary"]


def _words(text: str) -> set[str]:
    return {w.casefold() for w in re.findall(r"[A-Za-z_][A-Za-z0-9_]*", text)}


def test_c8_hallucination_filter(demo_store, tmp_path):
    with criterion(8, "out-of-schema ranker names never reach the refiner prompt (50 fixtures)"):
        schema = demo_store.schema
        static = _words(render_code_schema(schema).text + render_skeleton(builtin_skeleton())
                        + "".join(default_prompts().texts.values()))
        rng = random.Random(8)
        cases = []
        for i in range(50):
            question = f"Case {i}: {ITEMS[i % len(ITEMS)].nl}"  # distinct text, distinct fixture keys
            real = rng.sample(schema.names, rng.randint(0, 2))
            fake = rng.sample(HALLUCINATED, rng.randint(1, 3)) + rng.sample(DOTTED, rng.randint(0, 1))
            names = real + fake
            rng.shuffle(names)
            style = i % 5
            if style == 0:
                reply = f"CRUD: GO\nCLAUSES: none\nSCHEMA: {', '.join(names)}"
            elif style == 1:
                reply = "Reasoning first.\n- crud = `MATCH`, SELECT\n- clauses: WHERE, JOIN\n- schema: " + \
                        "; ".join(f"`{n}`" for n in names)
            elif style == 2:
                reply = f"crud: go\nclause: LIMIT\nschema: [{', '.join(names)}]."
            elif style == 3:
                reply = f"CRUD: FETCH\nCLAUSES: n/a\nSCHEMA: {', '.join(n.upper() for n in names)}"
            else:
                reply = f"CRUD: FLY\nCLAUSES: none\nSCHEMA: {', '.join(fake)}"  # everything invented
            unresolved = set()
            known = {s.casefold() for s in schema.names}
            for n in names:
                head, _, attr = n.partition(".")
                if head.casefold() not in known:
                    unresolved.add(head.casefold())
                elif attr:
                    unresolved.add(attr.casefold())  # the owner resolves, the invented attribute must not leak
            assert unresolved
            assert not (unresolved & static), unresolved & static
            assert not (unresolved & _words(question))
            cases.append((question, reply, unresolved))

        fixture = tmp_path / "adversarial.jsonl"
        current = {}

        def respond(req):
            return current["ranker"] if "ranker" in req.messages[0].content.lower() else "```ngql\nGO FROM 1 OVER follow\n```"

        chat = RecordingBackend(ScriptedChatBackend(respond, "adv"), fixture)
        embed = RecordingBackend(HashEmbeddingBackend(), fixture)
        recorder = Pipeline(demo_store, builtin_skeleton(), Backends(chat, chat, embed))
        for question, reply, _ in cases:
            current["ranker"] = reply
            recorder.translate(question)

        replay = ReplayBackend(fixture, model_name="adv", embed_model="hash-64")
        pipe = Pipeline(demo_store, builtin_skeleton(), Backends(replay, replay, replay))
        leaked = []
        for question, reply, unresolved in cases:
            res = pipe.translate(question)
            assert res.ranker.raw == reply  # the adversarial reply was actually served
            assert set(res.ranker.schema_subset) <= set(schema.names)
            prompt_words = _words(res.refiner_prompt)
            if unresolved & prompt_words:
                leaked.append((question, sorted(unresolved & prompt_words)))
            classes = re.findall(r"^class (\w+)\(", res.refiner_prompt, re.MULTILINE)
            assert set(classes) - {"GQL"} <= set(schema.names)
        assert leaked == []


# -- 9 -------------------------------------------------------------------------

_TOKENS = ["GO", "FROM", "OVER", "YIELD", "MATCH", "RETURN", "LOOKUP", "ON", "WHERE", "FETCH", "PROP", "|",
           "$$", "$-", "$^", ".", ",", "(", ")", "[", "]", "{", "}", "-", "->", "<-", "*", "..", ":", ";",
           '"', "'", "`", "==", ">=", "AND", "NOT", "XOR", "ORDER BY", "LIMIT", "GROUP BY", "STEPS",
           "REVERSELY", "player", "follow", "id(vertex)", "dst(edge)", "1", "29.5", "/*", "*/", "#", "\n",
           "\\", "count(*)", "AS", "SAMPLE", "WITH", "UNWIND", "DISTINCT", "SKIP", "INSERT", "é"]


_CORPUS = [q.encode() for q in CATALOG_EXAMPLES + GOLD_QUERIES]


class _Timeout(Exception):
    pass


def _alarm(signum, frame):
    raise _Timeout()


def test_c9_parser_fuzz():
    with criterion(9, "1e5 fuzzed inputs <= 1 KiB parse or raise SyntaxError within 100 ms"):
        rng = random.Random(9)
        printable = string.printable.encode()
        old = signal.signal(signal.SIGALRM, _alarm)
        slow, crashed, n_ast = [], [], 0
        try:
            for i in range(100_000):
                mode = i % 4
                if mode == 0:
                    data = rng.randbytes(rng.randint(0, 1024))
                elif mode == 1:
                    data = bytes(rng.choice(printable) for _ in range(rng.randint(0, 1024)))
                elif mode == 2:
                    data = bytearray(rng.choice(_CORPUS))
                    for _ in range(rng.randint(0, 4)):
                        pos = rng.randint(0, len(data))
                        op = rng.random()
                        if op < 0.4 and pos < len(data):
                            del data[pos]
                        elif op < 0.7:
                            data[pos:pos] = rng.choice(_TOKENS).encode()
                        elif pos < len(data):
                            data[pos] = rng.randrange(256)
                    data = bytes(data[:1024])
                else:
                    parts, size = [], 0
                    limit = rng.randint(0, 1024)
                    while True:
                        tok = rng.choice(_TOKENS).encode()
                        sep = b" " if rng.random() < 0.7 else b""
                        if size + len(tok) + len(sep) > limit:
                            break
                        parts.append(tok + sep)
                        size += len(tok) + len(sep)
                    data = b"".join(parts)
                assert len(data) <= 1024
                start = time.perf_counter()
                signal.setitimer(signal.ITIMER_REAL, 1.0)
                try:
                    parse(data)
                    n_ast += 1
                except GqlSyntaxError:
                    pass
                except _Timeout:
                    slow.append(data)
                    continue
                except Exception as exc:  # any other exception is a crash
                    crashed.append((data, repr(exc)))
                finally:
                    signal.setitimer(signal.ITIMER_REAL, 0)
                if time.perf_counter() - start > 0.1:
                    slow.append(data)
        finally:
            signal.signal(signal.SIGALRM, old)
        assert crashed == [], crashed[:3]
        assert slow == [], slow[:3]
        assert n_ast > 0
