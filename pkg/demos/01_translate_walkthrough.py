"""Follow one question through the ranker, the rewriter and the refiner.

The chat and embedding calls are served from the recorded demo fixtures, so
this runs offline and prints the same thing every time.

    python3 demos/01_translate_walkthrough.py
"""

from pathlib import Path

from nl2gql.cli import Config
from nl2gql.demo import bundle_dir
from nl2gql.gql import run

QUESTION = "Who does Porzingis follow?"

cfg = Config.load(Path(str(bundle_dir())) / "config.json")
pipe = cfg.pipeline()
store = pipe.store
print(f"Store: {len(store.nodes)} vertices, {len(store.edges)} edges; schema names {store.schema.names}")
print(f"Question: {QUESTION}\n")

result = pipe.translate(QUESTION)

print("1. Ranker")
print("   raw reply:      " + result.ranker.raw.replace("\n", " | "))
print(f"   kept schema:    {list(result.ranker.schema_subset)}")
print(f"   kept keywords:  {list(result.ranker.crud_keywords + result.ranker.clauses)}")
for w in result.ranker.warnings:
    print(f"   warning:        {w}")
print("   'like' is not an edge of this graph, so it never reaches the refiner.\n")

print("2. Rewriter")
for span, surface, kind in result.rewrite.substitutions:
    print(f"   {span!r:>12} -> {surface!r} ({kind})")
print(f"   rewritten:      {result.rewrite.rewritten_query}\n")

print("3. Refiner prompt (user message)")
for line in result.refiner_prompt.splitlines():
    print("   | " + line)
print()
print(f"4. Extracted query: {result.gql}\n")

print("5. Executed on the embedded store")
print(run(result.gql, store).to_text())
