"""The bundled basketball demo: twelve questions with authored model replies.

``build_bundle`` re-creates ``eval.jsonl``, ``fixtures.jsonl`` and
``config.json`` by running the real pipeline against scripted chat replies
and the hashing embedder, recording every backend call. Replaying those
fixtures reproduces the run without any model or network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib.resources import files
from pathlib import Path

from .backends import ChatRequest, HashEmbeddingBackend, RecordingBackend, ScriptedChatBackend
from .codegen import builtin_skeleton
from .evaluation import EvalItem, SimilarityParams, evaluate
from .graph_store import GraphStore, load_graph, load_schema
from .pipeline import Backends, Pipeline

MODEL_NAME = "demo-model"
EMBED_MODEL = "hash-64"
SCHEMA_ID = "basketballplayer"


@dataclass(frozen=True)
class DemoItem:
    nl: str
    gold: str
    ranker_reply: str
    refiner_reply: str


def _fenced(gql: str, preface: str = "") -> str:
    return f"{preface}```ngql\n{gql}\n```\n"


ITEMS: tuple[DemoItem, ...] = (
    DemoItem("Which players does Tim Duncan follow?",
             'GO FROM "player100" OVER follow YIELD dst(edge)',
             "CRUD: GO\nCLAUSES: none\nSCHEMA: follow, player",
             _fenced('GO FROM "player100" OVER follow YIELD dst(edge)')),
    DemoItem("What are the names of the players Tony Parker follows?",
             'GO FROM "player101" OVER follow YIELD $$.player.name AS name',
             "CRUD: GO\nCLAUSES: none\nSCHEMA: follow, player, teammate",
             _fenced('GO FROM "player101" OVER follow YIELD $$.player.name AS name',
                     "The query walks follow edges from Tony Parker.\n")),
    DemoItem("List the players older than 40.",
             "LOOKUP ON player WHERE player.age > 40 YIELD player.name AS name, player.age AS age",
             "CRUD: LOOKUP\nCLAUSES: WHERE\nSCHEMA: player, Player.height",
             _fenced("LOOKUP ON player WHERE player.age > 40 YIELD player.name AS name, player.age AS age")),
    DemoItem("How old is Yao Ming?",
             'FETCH PROP ON player "player133" YIELD player.age AS age',
             "CRUD: FETCH\nCLAUSES: none\nSCHEMA: player",
             'FETCH PROP ON player "player133" YIELD player.age AS age;'),
    DemoItem("Which teams has LaMarcus Aldridge played for?",
             'GO FROM "player102" OVER serve YIELD $$.team.name AS team',
             "CRUD: GO\nCLAUSES: none\nSCHEMA: serve, team, plays_for",
             _fenced('GO FROM "player102" OVER serve YIELD $$.team.name AS team')),
    DemoItem("Who follows Tim Duncan?",
             'GO FROM "player100" OVER follow REVERSELY YIELD src(edge) AS follower',
             "CRUD: GO\nCLAUSES: none\nSCHEMA: follow, fan_of",
             _fenced('MATCH (p:player)-[:follow]->(v:player) WHERE id(v) == "player100" RETURN id(p) AS follower',
                     "A MATCH pattern gives the same followers.\n")),
    DemoItem("Name the three oldest followers of Tony Parker.",
             'GO FROM "player101" OVER follow REVERSELY YIELD $$.player.name AS name, $$.player.age AS age'
             " | ORDER BY $-.age DESC, $-.name | LIMIT 3",
             "CRUD: GO\nCLAUSES: ORDER BY, LIMIT\nSCHEMA: follow, player",
             _fenced('GO FROM "player101" OVER follow REVERSELY YIELD $$.player.name AS name, $$.player.age AS age'
                     " | ORDER BY $-.age DESC, $-.name | LIMIT 3")),
    DemoItem("How many players have served the Spurs?",
             'MATCH (p:player)-[:serve]->(t:team) WHERE t.team.name == "Spurs" RETURN count(p) AS n',
             "CRUD: MATCH\nCLAUSES: WHERE\nSCHEMA: player, serve, team, franchise",
             _fenced('MATCH (p:player)-[:serve]->(t:team) WHERE t.team.name == "Spurs" RETURN count(p) AS n')),
    DemoItem("Who is two follow steps away from Yao Ming?",
             'GO 2 STEPS FROM "player133" OVER follow YIELD dst(edge) AS vid',
             "CRUD: GO\nCLAUSES: none\nSCHEMA: follow",
             _fenced('GO 2 STEPS FROM "player133" OVER follow YIELD dst(edge) AS vid')),
    DemoItem("For each age, how many players does Tim Duncan's follower list contain?",
             'GO FROM "player100" OVER follow REVERSELY YIELD $$.player.age AS age'
             " | GROUP BY $-.age YIELD $-.age AS age, count(*) AS n",
             "CRUD: GO\nCLAUSES: GROUP BY\nSCHEMA: follow, player",
             _fenced('GO FROM "player100" OVER follow REVERSELY YIELD $$.player.age AS age'
                     " | GROUP BY $-.age YIELD $-.age AS age, count(*) AS n")),
    DemoItem("Who does Porzingis follow?",
             'GO FROM "player149" OVER follow YIELD $$.player.name AS name',
             "CRUD: GO\nCLAUSES: none\nSCHEMA: follow, player, like",
             _fenced('GO FROM "player149" OVER follow YIELD $$.player.name AS name')),
    # valid but wrong: the model reads the wrong year attribute
    DemoItem("In which year did Manu Ginobili start playing for the Spurs?",
             'GO FROM "player125" OVER serve WHERE $$.team.name == "Spurs" YIELD serve.start_year AS year',
             "CRUD: GO\nCLAUSES: WHERE\nSCHEMA: serve, team",
             _fenced('GO FROM "player125" OVER serve WHERE $$.team.name == "Spurs" YIELD serve.end_year AS year')),
)


def bundle_dir():
    """Traversable for the packaged demo directory."""
    return files("nl2gql") / "data" / "demo"


def load_demo_store(directory=None) -> GraphStore:
    d = Path(directory) if directory is not None else bundle_dir()
    schema = load_schema(d.joinpath("schema.json").read_text(encoding="utf-8"))
    return load_graph(schema, d.joinpath("graph.json").read_text(encoding="utf-8"))


def demo_config() -> dict:
    return {
        "backends": {
            "demo": {"type": "replay", "fixture": "fixtures.jsonl", "model_name": MODEL_NAME,
                     "embed_model": EMBED_MODEL},
        },
        "roles": {"ranker": "demo", "refiner": "demo", "rewriter_embed": "demo", "eval_embed": "demo"},
        "sampling": {"temperature": 0.2, "top_p": 0.7},
        "align": {"tau1": 1.0, "k": 5, "span_ngrams": 4},
        "similarity": {"alpha": 0.5, "beta": 0.5, "theta": 0.9, "k1": 1.2, "b": 0.75},
        "paths": {"schema": "schema.json", "graph": "graph.json", "schema_id": SCHEMA_ID},
    }


def build_bundle(out_dir: str | Path) -> dict:
    """Write the eval file, fixtures and config into ``out_dir``; returns the report dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixture = out / "fixtures.jsonl"
    if fixture.exists():
        fixture.unlink()
    src = bundle_dir()
    for name in ("schema.json", "graph.json"):
        if not (out / name).exists():
            (out / name).write_text(src.joinpath(name).read_text(encoding="utf-8"), encoding="utf-8")
    store = load_demo_store(out)
    current: list[DemoItem] = []

    def respond(req: ChatRequest) -> str:
        item = current[0]
        return item.ranker_reply if "ranker" in req.messages[0].content.lower() else item.refiner_reply

    chat = RecordingBackend(ScriptedChatBackend(respond, MODEL_NAME), fixture)
    embed = RecordingBackend(HashEmbeddingBackend(embed_model=EMBED_MODEL), fixture)
    pipe = Pipeline(store, builtin_skeleton(), Backends(chat, chat, embed))
    records = []
    for i, item in enumerate(ITEMS, 1):
        current[:] = [item]
        pipe.translate(item.nl)
        records.append({"id": f"q{i:02d}", "nl": item.nl, "gold_gql": item.gold, "schema_id": SCHEMA_ID})
    with (out / "eval.jsonl").open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")
    (out / "config.json").write_text(json.dumps(demo_config(), indent=2) + "\n", encoding="utf-8")

    # run the evaluation once so its embedding calls land in the fixture too
    generated = []
    for item, r in zip(ITEMS, records):
        current[:] = [item]
        generated.append(EvalItem(item.nl, item.gold, pipe.translate(item.nl).gql, SCHEMA_ID, r["id"]))
    report = evaluate(generated, {SCHEMA_ID: store}, embed, SimilarityParams())
    return report.to_dict()


if __name__ == "__main__":  # pragma: no cover
    import sys

    print(json.dumps(build_bundle(sys.argv[1] if len(sys.argv) > 1 else "."), indent=2))
