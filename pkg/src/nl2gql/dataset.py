"""NL/GQL pairs, ranker training records, diverse sampling and schema-holdout splits."""

from __future__ import annotations

import json
import math
import random
import re
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .backends import Backend, ChatRequest, EmbeddingVector, Message
from .codegen import Skeleton, render_code_schema, render_skeleton
from .errors import GqlSyntaxError, InfeasibleSplit, KTooLarge, ParseError
from .gql import analysis
from .gql.parser import parse
from .graph_store import GraphSchema
from .pipeline import PromptSet, Sampling, default_prompts

LANGUAGES = ("en", "zh")
PROVENANCES = ("manual", "gql2nl", "kbqa_style")


@dataclass(frozen=True)
class NlGqlPair:
    nl: str
    gql: str
    schema_id: str = "default"
    language: str = "en"
    provenance: str = "manual"

    def __post_init__(self):
        if not self.nl.strip():
            raise ValueError("pair needs a nonempty nl text")
        if self.language not in LANGUAGES:
            raise ValueError(f"language must be one of {LANGUAGES}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")


@dataclass(frozen=True)
class Choice:
    items: tuple[str, ...]
    justification: str


@dataclass(frozen=True)
class ReasoningTrace:
    crud_choice: Choice
    clause_choice: Choice
    schema_choice: Choice


@dataclass(frozen=True)
class TrainRecord:
    nl: str
    gql: str
    sch: str
    ske: str
    rea: ReasoningTrace
    schema_id: str = "default"

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("crud_choice", "clause_choice", "schema_choice"):
            d["rea"][key]["items"] = list(d["rea"][key]["items"])
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainRecord":
        rea = d["rea"]
        trace = ReasoningTrace(*(Choice(tuple(rea[k]["items"]), rea[k]["justification"])
                                 for k in ("crud_choice", "clause_choice", "schema_choice")))
        return cls(d["nl"], d["gql"], d["sch"], d["ske"], trace, d.get("schema_id", "default"))


# -- jsonl io -------------------------------------------------------------------

def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc.msg}") from exc
    return out


def write_jsonl(path: str | Path, records: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def load_pairs(path: str | Path) -> list[NlGqlPair]:
    pairs = []
    for i, d in enumerate(read_jsonl(path)):
        try:
            pair = NlGqlPair(d["nl"], d["gql"], d.get("schema_id", "default"), d.get("language", "en"),
                             d.get("provenance", "manual"))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"{path}: record {i}: {exc}") from exc
        pairs.append(pair)
    return pairs


def dump_pairs(path: str | Path, pairs: Iterable[NlGqlPair]) -> None:
    write_jsonl(path, (asdict(p) for p in pairs))


# -- GQL2NL ---------------------------------------------------------------------

_NUMBERING = re.compile(r"^\s*(?:[-*•]|\d+[.)]|\(\d+\))\s*")


@dataclass(frozen=True)
class Gql2NlResult:
    phrasings: tuple[str, ...]
    requested: int
    short: bool


def gql2nl(gql: str, schema: GraphSchema, n_variants: int, backend: Backend,
           prompts: PromptSet | None = None, sampling: Sampling = Sampling()) -> Gql2NlResult:
    """Ask the backend for ``n_variants`` questions answered by ``gql``.

    Lines are stripped of list numbering and deduplicated in order. Fewer than
    requested sets ``short`` and emits a warning; the phrasings still need a
    human pass before use.
    """
    if n_variants < 1:
        raise ValueError("n_variants must be positive")
    parse(gql)  # precondition: raises GqlSyntaxError
    prompts = prompts or default_prompts()
    user = prompts.fill("gql2nl_user", code_schema=render_code_schema(schema).text, gql=gql, n=str(n_variants))
    req = ChatRequest((Message("system", prompts.texts["gql2nl_system"]), Message("user", user)),
                      sampling.temperature, sampling.top_p)
    raw = backend.chat(req).content
    seen: list[str] = []
    for line in raw.splitlines():
        text = _NUMBERING.sub("", line).strip()
        if text and text not in seen:
            seen.append(text)
    got = tuple(seen[:n_variants])
    short = len(got) < n_variants
    if short:
        warnings.warn(f"gql2nl returned {len(got)} of {n_variants} requested phrasings", stacklevel=2)
    return Gql2NlResult(got, n_variants, short)


# -- train records ----------------------------------------------------------------

def reasoning_trace(gql: str, schema: GraphSchema, skeleton: Skeleton) -> ReasoningTrace:
    """Derive the three choices mechanically from the query's AST."""
    try:
        stmt = parse(gql)
    except GqlSyntaxError as exc:
        raise ParseError(f"cannot build a record from invalid query: {exc}") from exc
    crud = tuple(k for k in analysis.crud_keywords(stmt) if k in skeleton)
    clauses = tuple(k for k in analysis.clause_keywords(stmt) if k in skeleton)
    names = tuple(analysis.schema_names(stmt, schema))

    def why(keywords: Sequence[str]) -> str:
        return "; ".join(f"{k}: {skeleton.lookup(k).meaning}" for k in keywords) or "none needed"

    def why_names() -> str:
        parts = []
        for n in names:
            kind = "tag" if schema.tag(n) is not None else "edge"
            desc = (schema.tag(n) or schema.edge(n)).description
            parts.append(f"{n} ({kind}){': ' + desc if desc else ''}")
        return "; ".join(parts) or "none needed"

    return ReasoningTrace(Choice(crud, why(crud)), Choice(clauses, why(clauses)), Choice(names, why_names()))


def build_train_record(pair: NlGqlPair, schema: GraphSchema, skeleton: Skeleton) -> TrainRecord:
    rea = reasoning_trace(pair.gql, schema, skeleton)
    return TrainRecord(
        pair.nl, pair.gql,
        render_code_schema(schema, only=rea.schema_choice.items).text,
        render_skeleton(skeleton, rea.crud_choice.items + rea.clause_choice.items),
        rea, pair.schema_id,
    )


# -- K-Center Greedy ----------------------------------------------------------------

def _as_matrix(vectors: Sequence) -> np.ndarray:
    rows = [v.values if isinstance(v, EmbeddingVector) else v for v in vectors]
    if not rows:
        raise ValueError("k_center_greedy needs at least one vector")
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise ValueError(f"vectors have mixed dimensions {sorted(dims)}")
    return np.asarray(rows, dtype=float)


def k_center_greedy(vectors: Sequence, k: int, init: str = "max_norm") -> list[int]:
    """Farthest-point selection under Euclidean distance.

    ``init="max_norm"`` starts from the vector with the largest norm,
    ``"first_index"`` from index 0. Every later pick maximises the distance
    to its nearest selected point; ties go to the lowest index.
    """
    x = _as_matrix(vectors)
    n = len(x)
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the {n} available vectors")
    if init == "first_index":
        first = 0
    elif init == "max_norm":
        first = int(np.argmax(np.einsum("ij,ij->i", x, x)))
    else:
        raise ValueError(f"unknown init rule {init!r}")
    selected = [first]
    nearest = np.einsum("ij,ij->i", x - x[first], x - x[first])
    nearest[first] = -np.inf
    while len(selected) < k:
        nxt = int(np.argmax(nearest))  # argmax returns the first maximum
        selected.append(nxt)
        d = np.einsum("ij,ij->i", x - x[nxt], x - x[nxt])
        nearest = np.minimum(nearest, d)
        nearest[selected] = -np.inf
    return selected


def coverage_radius(vectors: Sequence, selected: Sequence[int]) -> float:
    """Largest distance from any point to its nearest selected point."""
    x = _as_matrix(vectors)
    if not selected:
        raise ValueError("coverage radius of an empty selection is undefined")
    diff = x[:, None, :] - x[list(selected)][None, :, :]
    return float(math.sqrt(max(0.0, np.einsum("ijk,ijk->ij", diff, diff).min(axis=1).max())))


# -- splits -------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    holdout_schemas: frozenset[str] = field(default_factory=frozenset)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        object.__setattr__(self, "holdout_schemas", frozenset(self.holdout_schemas))


def split_by_schema(pairs: Sequence[NlGqlPair], spec: SplitSpec = SplitSpec()) -> tuple[list, list]:
    """Holdout schemas go wholly to test; the rest fill train by seeded shuffle.

    Train gets ``round(train_fraction * len(pairs))`` items when the holdout
    leaves room. Both splits keep the input order.
    """
    present = {p.schema_id for p in pairs}
    missing = spec.holdout_schemas - present
    if missing:
        raise ValueError(f"holdout schemas not present in pairs: {sorted(missing)}")
    target = math.floor(spec.train_fraction * len(pairs) + 0.5)
    pool = [i for i, p in enumerate(pairs) if p.schema_id not in spec.holdout_schemas]
    if len(pool) < target:
        warnings.warn(f"holdout leaves {len(pool)} pairs for a train target of {target}", InfeasibleSplit,
                      stacklevel=2)
        train_idx = set(pool)
    else:
        shuffled = list(pool)
        random.Random(spec.seed).shuffle(shuffled)
        train_idx = set(shuffled[:target])
    train = [p for i, p in enumerate(pairs) if i in train_idx]
    test = [p for i, p in enumerate(pairs) if i not in train_idx]
    return train, test
