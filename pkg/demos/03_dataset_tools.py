"""Pick diverse questions, split by schema and build a ranker training record.

    python3 demos/03_dataset_tools.py
"""

from pathlib import Path

from nl2gql.cli import Config
from nl2gql.codegen import builtin_skeleton
from nl2gql.dataset import NlGqlPair, SplitSpec, build_train_record, coverage_radius, k_center_greedy, split_by_schema
from nl2gql.demo import ITEMS, bundle_dir

cfg = Config.load(Path(str(bundle_dir())) / "config.json")
store = cfg.store()
embed = cfg.role("eval_embed")

# Diverse sampling over the question embeddings already recorded in the fixtures.
texts = [it.gold for it in ITEMS]
vectors = [v.values for v in embed.embed(texts)]
print("K-Center Greedy over the twelve gold queries:")
for k in (1, 3, 6):
    chosen = k_center_greedy(vectors, k)
    print(f"  k={k}: indices {chosen}, coverage radius {coverage_radius(vectors, chosen):.3f}")
print("  The radius can only shrink as k grows.\n")

# Every question of a held-out schema lands in the test split.
pairs = [NlGqlPair(it.nl, it.gold, "basketballplayer") for it in ITEMS]
pairs += [NlGqlPair(f"Which movies did director {i} make?", f'GO FROM "d{i}" OVER directed', "movies")
          for i in range(3)]
train, test = split_by_schema(pairs, SplitSpec(holdout_schemas={"movies"}, seed=0))
print(f"Split with 'movies' held out: {len(train)} train, {len(test)} test")
print(f"  schemas in train: {sorted({p.schema_id for p in train})}")
print(f"  schemas in test:  {sorted({p.schema_id for p in test})}\n")

# A training record pairs the question with the exact context the ranker should pick.
rec = build_train_record(pairs[6], store.schema, builtin_skeleton())
print(f"Training record for: {rec.nl}")
print(f"  crud:    {rec.rea.crud_choice.items}  ({rec.rea.crud_choice.justification})")
print(f"  clauses: {rec.rea.clause_choice.items}")
print(f"  schema:  {rec.rea.schema_choice.items}")
print("  skeleton excerpt:")
for line in rec.ske.splitlines()[3:6]:
    print("    " + line)
