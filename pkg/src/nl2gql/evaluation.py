"""Syntax, comprehension and execution accuracy, plus result-table similarity.

``sa = valid / total``, ``ea = correct / total`` and ``iea = correct / valid``,
so ``ea == sa * iea`` whenever anything is valid. An item is correct when the
combined similarity between the gold and generated result tables reaches
``theta``.
"""

from __future__ import annotations

import enum
import json
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

from .align import cosine
from .backends import Backend
from .errors import EmptyGold, EmptyInput, GoldExecutionError, GqlSyntaxError, Nl2GqlError, UnsupportedFeature
from .gql import analysis
from .gql.executor import execute
from .gql.parser import parse, validate
from .gql.table import ResultTable
from .graph_store import GraphStore

Scorer = Callable[[str, str], float]


@dataclass(frozen=True)
class EvalItem:
    nl: str
    gold_gql: str
    generated_gql: str | None = None
    schema_id: str = "default"
    item_id: str = ""

    @classmethod
    def from_dict(cls, d: Mapping, index: int = 0) -> "EvalItem":
        return cls(d["nl"], d["gold_gql"], d.get("generated_gql"), d.get("schema_id", "default"),
                   str(d.get("id", index)))


@dataclass(frozen=True)
class SimilarityParams:
    alpha: float = 0.5
    beta: float = 0.5
    theta: float = 0.9
    k1: float = 1.2
    b: float = 0.75
    normalize_bm25: bool = True

    def __post_init__(self):
        for name in ("alpha", "beta", "theta", "b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.k1 <= 0:
            raise ValueError("k1 must be positive")


class ErrorCategory(str, enum.Enum):
    SCHEMA_SELECTION = "schema_selection"
    SKELETON_SELECTION = "skeleton_selection"
    NO_RELATED_INFORMATION = "no_related_information"
    SYNTAX_ERROR = "syntax_error"
    QUERY_MISUNDERSTANDING = "query_misunderstanding"
    OTHER = "other"
    NONE = "none"


# -- combined similarity ----------------------------------------------------------

def tokenize(text: str) -> list[str]:
    """Case-folded word tokens; whitespace and punctuation separate them."""
    return re.findall(r"\w+", text.casefold())


def jaccard_term(gold_tokens: Sequence[str], gen_tokens: Sequence[str]) -> float:
    """``|T1 & T2| / |T1|`` with the gold set alone in the denominator."""
    t1, t2 = set(gold_tokens), set(gen_tokens)
    if not t1:
        raise EmptyGold("gold result has no tokens")
    return len(t1 & t2) / len(t1)


def bm25_cosine(doc1: Sequence[str], doc2: Sequence[str], k1: float = 1.2, b: float = 0.75) -> float:
    """Cosine between the BM25 weight vectors of two documents, scored within that two-document corpus."""
    docs = [Counter(doc1), Counter(doc2)]
    lengths = [len(doc1), len(doc2)]
    avgdl = sum(lengths) / 2 or 1.0
    vocab = sorted(set(doc1) | set(doc2))
    vectors = []
    for tf, dl in zip(docs, lengths):
        vec = []
        for term in vocab:
            n = sum(1 for d in docs if term in d)
            idf = math.log((2 - n + 0.5) / (n + 0.5) + 1.0)
            f = tf.get(term, 0)
            vec.append(idf * f * (k1 + 1) / (f + k1 * (1 - b + b * dl / avgdl)) if f else 0.0)
        vectors.append(vec)
    if not vocab:
        return 0.0
    return max(0.0, cosine(vectors[0], vectors[1]))


def embedding_scorer(backend: Backend) -> Scorer:
    """Cosine of the two texts' embeddings, clamped to [0, 1]."""
    def score(a: str, b: str) -> float:
        va, vb = backend.embed([a, b])
        return min(1.0, max(0.0, cosine(va, vb)))
    return score


def combined_similarity(gold: ResultTable | str, generated: ResultTable | str,
                        params: SimilarityParams = SimilarityParams(),
                        scorer: Scorer | None = None) -> float:
    """Blend of gold-normalised token overlap, BM25 cosine and a semantic score.

    ``beta * (alpha * jaccard + (1 - alpha) * bm25) + (1 - beta) * scorer``,
    with the BM25 cosine mapped through ``(x + 1) / 2`` unless
    ``params.normalize_bm25`` is off. Without a scorer the semantic term
    falls back to exact text equality (1 or 0).
    """
    gold_text = gold.to_text() if isinstance(gold, ResultTable) else gold
    gen_text = generated.to_text() if isinstance(generated, ResultTable) else generated
    t1, t2 = tokenize(gold_text), tokenize(gen_text)
    if not t1:
        raise EmptyGold("gold result has no tokens")
    jac = jaccard_term(t1, t2)
    bm = bm25_cosine(t1, t2, params.k1, params.b)
    if params.normalize_bm25:
        bm = (bm + 1.0) / 2.0
    if scorer is None:
        sem = 1.0 if gold_text == gen_text else 0.0
    elif gold_text == gen_text:
        sem = 1.0
    else:
        sem = min(1.0, max(0.0, float(scorer(gold_text, gen_text))))
    value = params.beta * (params.alpha * jac + (1 - params.alpha) * bm) + (1 - params.beta) * sem
    return min(1.0, max(0.0, value))


# -- executors ---------------------------------------------------------------

class QueryExecutor(Protocol):
    """Anything that turns query text into a :class:`ResultTable` for a store.

    Implementations raise :class:`UnsupportedFeature` for statements they cannot
    run. A client for a live graph server would implement this.
    """

    def run(self, gql: str, store: GraphStore) -> ResultTable: ...


@dataclass(frozen=True)
class EmbeddedExecutor:
    seed: int = 0

    def run(self, gql: str, store: GraphStore) -> ResultTable:
        return execute(parse(gql), store, self.seed)


# -- metrics -------------------------------------------------------------------

def _is_valid(text: str | None, validator) -> bool:
    return bool(text) and validator(text) is None


def syntax_accuracy(items: Sequence[EvalItem], validator=validate) -> float:
    if not items:
        raise ValueError("syntax_accuracy needs at least one item")
    return sum(1 for it in items if _is_valid(it.generated_gql, validator)) / len(items)


def _pair_cosine(backend: Backend, gold: str, gen: str | None) -> float:
    if not gen or not gen.strip():
        return 0.0
    try:
        va, vb = backend.embed([gold, gen])
    except EmptyInput:
        return 0.0
    return max(0.0, cosine(va, vb))


def comprehension_accuracy(items: Sequence[EvalItem], embed_backend: Backend) -> float:
    """Mean clamped cosine between gold and generated query embeddings."""
    if not items:
        raise ValueError("comprehension_accuracy needs at least one item")
    return math.fsum(_pair_cosine(embed_backend, it.gold_gql, it.generated_gql) for it in items) / len(items)


@dataclass
class ItemResult:
    item_id: str
    valid: bool
    combined_sim: float
    correct: bool
    ca_sim: float = 0.0
    syntax_error: str | None = None
    exec_error: str | None = None
    error_category: ErrorCategory = ErrorCategory.OTHER

    def to_dict(self) -> dict:
        return {"id": self.item_id, "valid": self.valid, "combined_sim": self.combined_sim,
                "correct": self.correct, "ca_sim": self.ca_sim, "syntax_error": self.syntax_error,
                "exec_error": self.exec_error, "error_category": self.error_category.value}


@dataclass
class EvalReport:
    sa: float
    ca: float
    ea: float
    iea: float
    n_total: int
    n_valid: int
    n_correct: int
    params: SimilarityParams = field(default_factory=SimilarityParams)
    items: list[ItemResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {"alpha": p.alpha, "beta": p.beta, "theta": p.theta, "k1": p.k1, "b": p.b,
                       "normalize_bm25": p.normalize_bm25},
            "sa": self.sa, "ca": self.ca, "ea": self.ea, "iea": self.iea,
            "n_total": self.n_total, "n_valid": self.n_valid, "n_correct": self.n_correct,
            "items": [it.to_dict() for it in self.items],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        lines = [f"theta={self.params.theta} alpha={self.params.alpha} beta={self.params.beta}",
                 f"SA  {self.sa:.4f}  ({self.n_valid}/{self.n_total})",
                 f"CA  {self.ca:.4f}",
                 f"EA  {self.ea:.4f}  ({self.n_correct}/{self.n_total})",
                 f"IEA {self.iea:.4f}  ({self.n_correct}/{self.n_valid})",
                 "",
                 f"{'id':<8} {'valid':<6} {'sim':>7} {'correct':<8} category"]
        for it in self.items:
            lines.append(f"{it.item_id:<8} {str(it.valid).lower():<6} {it.combined_sim:7.4f} "
                         f"{str(it.correct).lower():<8} {it.error_category.value}")
        return "\n".join(lines) + "\n"


def report_from_items(results: Sequence[ItemResult], ca: float,
                      params: SimilarityParams = SimilarityParams()) -> EvalReport:
    n_total = len(results)
    n_valid = sum(1 for r in results if r.valid)
    n_correct = sum(1 for r in results if r.correct)
    if n_total == 0:
        raise ValueError("cannot report on zero items")
    return EvalReport(n_valid / n_total, ca, n_correct / n_total, n_correct / n_valid if n_valid else 0.0,
                      n_total, n_valid, n_correct, params, list(results))


def _score_item(it: EvalItem, store: GraphStore, executor: QueryExecutor, params: SimilarityParams,
                scorer: Scorer | None, validator) -> tuple[bool, float, str | None, str | None]:
    try:
        gold_table = executor.run(it.gold_gql, store)
    except Exception as exc:  # any failure of a gold query is a dataset defect
        raise GoldExecutionError(it.item_id, exc) from exc
    err = validator(it.generated_gql) if it.generated_gql else GqlSyntaxError("no generated query")
    if err is not None:
        return False, 0.0, str(err), None
    try:
        gen_table = executor.run(it.generated_gql, store)
    except (UnsupportedFeature, Nl2GqlError) as exc:
        return True, 0.0, None, f"{type(exc).__name__}: {exc}"
    return True, combined_similarity(gold_table, gen_table, params, scorer), None, None


def execution_accuracy(items: Sequence[EvalItem], executor: QueryExecutor,
                       store_lookup: Callable[[str], GraphStore] | Mapping[str, GraphStore],
                       params: SimilarityParams = SimilarityParams(), scorer: Scorer | None = None,
                       validator=validate, jobs: int = 1) -> tuple[float, float, list[ItemResult]]:
    """Returns ``(ea, iea, per-item rows)``.

    Raises:
        GoldExecutionError: a gold query failed to run; carries the item id.
    """
    lookup = store_lookup.__getitem__ if isinstance(store_lookup, Mapping) else store_lookup

    def one(it: EvalItem) -> ItemResult:
        valid, sim, syn, exe = _score_item(it, lookup(it.schema_id), executor, params, scorer, validator)
        return ItemResult(it.item_id, valid, sim, valid and sim >= params.theta, syntax_error=syn,
                          exec_error=exe)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, items))
    else:
        rows = [one(it) for it in items]
    n = len(rows)
    n_valid = sum(r.valid for r in rows)
    n_correct = sum(r.correct for r in rows)
    return (n_correct / n if n else 0.0, n_correct / n_valid if n_valid else 0.0, rows)


# -- diagnostics -----------------------------------------------------------------

@dataclass
class Intermediates:
    """What the pipeline chose for one item, when available."""

    schema_subset: Sequence[str] = ()
    crud_keywords: Sequence[str] = ()
    n_matches: int | None = None


def classify_error(item: EvalItem, result: ItemResult, store: GraphStore,
                   intermediates: Intermediates | None = None, ca_threshold: float = 0.9) -> ErrorCategory:
    """Rule-based taxonomy label; the first rule that fires wins."""
    if result.correct:
        return ErrorCategory.NONE
    if not result.valid:
        return ErrorCategory.SYNTAX_ERROR
    schema = store.schema
    gold = parse(item.gold_gql)
    gen = parse(item.generated_gql)
    gold_names = set(analysis.schema_names(gold, schema))
    gen_names = set(analysis.schema_names(gen, schema))
    if intermediates is not None and intermediates.schema_subset:
        if not gold_names <= set(intermediates.schema_subset):
            return ErrorCategory.SCHEMA_SELECTION
    if gen_names != gold_names:
        return ErrorCategory.SCHEMA_SELECTION
    gold_crud = analysis.crud_keywords(gold)
    if intermediates is not None and intermediates.crud_keywords:
        if not set(gold_crud) <= set(intermediates.crud_keywords):
            return ErrorCategory.SKELETON_SELECTION
    if gold_crud != analysis.crud_keywords(gen):
        return ErrorCategory.SKELETON_SELECTION
    if not set(analysis.clause_keywords(gold)) <= set(analysis.clause_keywords(gen)):
        return ErrorCategory.SKELETON_SELECTION
    gold_vids = analysis.vid_literals(gold)
    gen_vids = analysis.vid_literals(gen)
    gold_in_store = bool(gold_vids) and all(v in store.nodes for v in gold_vids)
    if gold_in_store:
        if intermediates is not None and intermediates.n_matches == 0:
            return ErrorCategory.NO_RELATED_INFORMATION
        if any(v not in store.nodes for v in gen_vids):
            return ErrorCategory.NO_RELATED_INFORMATION
    if result.ca_sim >= ca_threshold:
        return ErrorCategory.QUERY_MISUNDERSTANDING
    return ErrorCategory.OTHER


def evaluate(items: Sequence[EvalItem], store_lookup: Callable[[str], GraphStore] | Mapping[str, GraphStore],
             embed_backend: Backend, params: SimilarityParams = SimilarityParams(),
             scorer: Scorer | None = None, executor: QueryExecutor | None = None,
             intermediates: Mapping[str, Intermediates] | None = None, jobs: int = 1) -> EvalReport:
    """Full report: all four metrics plus per-item diagnostics.

    The default semantic scorer is embedding cosine on ``embed_backend``.
    """
    if not items:
        raise ValueError("nothing to evaluate")
    lookup = store_lookup.__getitem__ if isinstance(store_lookup, Mapping) else store_lookup
    executor = executor or EmbeddedExecutor()
    scorer = scorer if scorer is not None else embedding_scorer(embed_backend)
    _, _, rows = execution_accuracy(items, executor, lookup, params, scorer, jobs=jobs)
    for it, row in zip(items, rows):
        row.ca_sim = _pair_cosine(embed_backend, it.gold_gql, it.generated_gql)
        inter = intermediates.get(it.item_id) if intermediates else None
        row.error_category = classify_error(it, row, lookup(it.schema_id), inter)
    ca = math.fsum(r.ca_sim for r in rows) / len(rows)
    return report_from_items(rows, ca, params)
