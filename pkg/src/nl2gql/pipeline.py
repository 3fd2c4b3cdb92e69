"""Ranker, rewriter and refiner stages, composed by :func:`translate`.

The ranker picks keywords and a schema subset, the rewriter grounds entity
mentions in stored data, and the refiner writes the final statement from the
reduced context. Model replies are validated against the schema and the
skeleton before anything is forwarded, so invented names never reach the
refiner prompt.
"""

from __future__ import annotations

import re
import string
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .align import (AlignmentMatch, CandidateItem, RewriteResult, build_index, render_fact, retrieve,
                    rewrite)
from .backends import DEFAULT_TEMPERATURE, DEFAULT_TOP_P, Backend, ChatRequest, Message
from .codegen import CLAUSE, CRUD, Skeleton, render_code_schema, render_skeleton
from .errors import NoQueryFound, ParseFailure, StageError
from .graph_store import GraphSchema, GraphStore

PROMPT_NAMES = ("ranker_system", "ranker_user", "ranker_retry", "refiner_system", "refiner_user",
                "refiner_facts", "gql2nl_system", "gql2nl_user")

RANKER, REWRITER, REFINER = "ranker", "rewriter", "refiner"


@dataclass(frozen=True)
class PromptSet:
    """Prompt templates (``string.Template`` syntax) plus their version tag."""

    texts: dict
    version: str = "1"

    @classmethod
    def load(cls, override_dir: str | Path | None = None) -> "PromptSet":
        """Packaged templates, with any same-named ``.txt`` in ``override_dir`` taking precedence."""
        pkg = resources.files("nl2gql") / "prompts"
        texts = {name: (pkg / f"{name}.txt").read_text(encoding="utf-8") for name in PROMPT_NAMES}
        version = (pkg / "VERSION").read_text(encoding="utf-8").strip()
        if override_dir is not None:
            d = Path(override_dir)
            for name in PROMPT_NAMES:
                p = d / f"{name}.txt"
                if p.exists():
                    texts[name] = p.read_text(encoding="utf-8")
            if (d / "VERSION").exists():
                version = (d / "VERSION").read_text(encoding="utf-8").strip()
        return cls(texts, version)

    def fill(self, name: str, **values: str) -> str:
        return string.Template(self.texts[name]).substitute(values)


_DEFAULT_PROMPTS: PromptSet | None = None


def default_prompts() -> PromptSet:
    global _DEFAULT_PROMPTS
    if _DEFAULT_PROMPTS is None:
        _DEFAULT_PROMPTS = PromptSet.load()
    return _DEFAULT_PROMPTS


@dataclass(frozen=True)
class Sampling:
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P


@dataclass(frozen=True)
class AlignParams:
    tau1: float = 1.0
    k: int = 5
    span_ngrams: int = 4
    min_u2: float = 0.5


# -- ranker -------------------------------------------------------------

@dataclass(frozen=True)
class RankerOutput:
    schema_subset: tuple[str, ...]
    crud_keywords: tuple[str, ...]
    clauses: tuple[str, ...]
    raw: str = ""
    warnings: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"schema_subset": list(self.schema_subset), "crud_keywords": list(self.crud_keywords),
                "clauses": list(self.clauses), "raw": self.raw, "warnings": list(self.warnings),
                "flags": list(self.flags)}


_LABEL = re.compile(r"^\s*[-*]?\s*(CRUD|CLAUSES?|SCHEMA)\s*[:=]\s*(.*)$", re.IGNORECASE)
_NONE_WORDS = {"none", "n/a", "-", "null", "empty", ""}


def _split_values(text: str) -> list[str]:
    values = []
    for piece in re.split(r"[,;]", text):
        v = piece.strip().strip("`'\"[]().").strip()
        if v.lower() not in _NONE_WORDS:
            values.append(v)
    return values


def parse_ranker_reply(raw: str) -> RankerOutput:
    """Read the three labelled lines. Raises :class:`ParseFailure` if one is missing."""
    found: dict[str, list[str]] = {}
    for line in raw.splitlines():
        m = _LABEL.match(line)
        if m is None:
            continue
        label = m.group(1).upper()
        label = "CLAUSES" if label.startswith("CLAUSE") else label
        if label not in found:
            found[label] = _split_values(m.group(2))
    missing = [x for x in ("CRUD", "CLAUSES", "SCHEMA") if x not in found]
    if missing:
        raise ParseFailure(f"ranker reply lacks line(s) {', '.join(missing)}")
    return RankerOutput(tuple(found["SCHEMA"]), tuple(found["CRUD"]), tuple(found["CLAUSES"]), raw)


def _norm_keyword(text: str) -> str:
    return " ".join(text.upper().split())


def validate_ranker_output(out: RankerOutput, schema: GraphSchema, skeleton: Skeleton) -> RankerOutput:
    """Drop names and keywords that do not exist; fall back to everything when a list empties.

    Matching is case-insensitive and yields the canonical spelling. A keyword
    listed under the wrong heading moves to the right one.
    """
    warnings = list(out.warnings)
    flags = list(out.flags)
    by_fold = {}
    for name in schema.names:
        by_fold.setdefault(name.casefold(), name)
    subset: list[str] = []
    for name in out.schema_subset:
        canon = by_fold.get(name.casefold())
        if canon is None:
            # "player.name" style mentions resolve to their owner
            head = name.split(".")[0].strip()
            canon = by_fold.get(head.casefold()) if head != name else None
        if canon is None:
            warnings.append(f"dropped schema name {name!r}: not in schema")
        elif canon not in subset:
            subset.append(canon)

    kinds = {e.keyword: e.kind for e in skeleton.entries}
    crud: list[str] = []
    clauses: list[str] = []
    for listed, kw_raw in [(CRUD, k) for k in out.crud_keywords] + [(CLAUSE, k) for k in out.clauses]:
        kw = _norm_keyword(kw_raw)
        kind = kinds.get(kw)
        if kind is None:
            warnings.append(f"dropped keyword {kw_raw!r}: not in skeleton")
            continue
        if kind != listed:
            warnings.append(f"moved keyword {kw!r} to the {kind} list")
        target = crud if kind == CRUD else clauses
        if kw not in target:
            target.append(kw)

    if not subset:
        subset = list(schema.names)
        flags.append("schema_fail_open")
    if not crud:
        crud = skeleton.keywords(CRUD)
        flags.append("crud_fail_open")
    return RankerOutput(tuple(subset), tuple(crud), tuple(clauses), out.raw, tuple(warnings), tuple(flags))


def ranker_request(schema: GraphSchema, skeleton: Skeleton, query: str,
                   prompts: PromptSet | None = None, sampling: Sampling = Sampling()) -> ChatRequest:
    prompts = prompts or default_prompts()
    user = prompts.fill("ranker_user", code_schema=render_code_schema(schema).text,
                        skeleton=render_skeleton(skeleton), query=query)
    return ChatRequest((Message("system", prompts.texts["ranker_system"]), Message("user", user)),
                       sampling.temperature, sampling.top_p)


def rank(schema: GraphSchema, skeleton: Skeleton, query: str, backend: Backend,
         prompts: PromptSet | None = None, sampling: Sampling = Sampling()) -> RankerOutput:
    """Ask the ranker model, re-prompting once on an unreadable reply, then validate."""
    prompts = prompts or default_prompts()
    req = ranker_request(schema, skeleton, query, prompts, sampling)
    raw = backend.chat(req).content
    try:
        parsed = parse_ranker_reply(raw)
    except ParseFailure:
        retry = ChatRequest(req.messages + (Message("assistant", raw),
                                            Message("user", prompts.texts["ranker_retry"])),
                            req.temperature, req.top_p, req.model_name)
        raw = backend.chat(retry).content
        parsed = parse_ranker_reply(raw)
    return validate_ranker_output(parsed, schema, skeleton)


# -- refiner ------------------------------------------------------------

@dataclass(frozen=True)
class RefinerInput:
    code_schema_subset: str
    skeleton_subset: str
    rewritten_query: str
    retrieved_facts: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("code_schema_subset", "skeleton_subset", "rewritten_query"):
            if not getattr(self, name).strip():
                raise ValueError(f"RefinerInput.{name} must be nonempty")


def refiner_request(inp: RefinerInput, prompts: PromptSet | None = None,
                    sampling: Sampling = Sampling()) -> ChatRequest:
    prompts = prompts or default_prompts()
    facts_section = ""
    if inp.retrieved_facts:
        facts_section = prompts.fill("refiner_facts", facts="\n".join(f"- {f}" for f in inp.retrieved_facts))
    user = prompts.fill("refiner_user", code_schema=inp.code_schema_subset, skeleton=inp.skeleton_subset,
                        facts_section=facts_section, query=inp.rewritten_query)
    return ChatRequest((Message("system", prompts.texts["refiner_system"]), Message("user", user)),
                       sampling.temperature, sampling.top_p)


def refine(inp: RefinerInput, backend: Backend, prompts: PromptSet | None = None,
           sampling: Sampling = Sampling()) -> str:
    return backend.chat(refiner_request(inp, prompts, sampling)).content


_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_STATEMENT_START = re.compile(r"\b(CREATE|INSERT|GO|FETCH|LOOKUP|MATCH|OPTIONAL MATCH|UPDATE|UPSERT|DELETE"
                              r"|GET SUBGRAPH|FIND|UNWIND)\b")


def _trim_statement(text: str) -> str:
    text = text.strip()
    while text.endswith(";"):
        text = text[:-1].rstrip()
    return text


def extract_gql(raw: str) -> str:
    """First fenced block, else the first line containing a statement keyword (from that keyword on)."""
    if not raw or not raw.strip():
        raise NoQueryFound("empty reply")
    for m in _FENCE.finditer(raw):
        body = _trim_statement(m.group(1))
        if body:
            return body
    for line in raw.splitlines():
        m = _STATEMENT_START.search(line)
        if m:
            stmt = line[m.start():]
            # stop at the first statement terminator; prose may follow it
            stmt = _split_at_semicolon(stmt)
            stmt = _trim_statement(stmt)
            if stmt:
                return stmt
    raise NoQueryFound("reply contains no nGQL statement")


def _split_at_semicolon(text: str) -> str:
    quote = None
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "\"'`":
            quote = ch
        elif ch == ";":
            return text[:i]
        i += 1
    return text


# -- composition --------------------------------------------------------

@dataclass
class Backends:
    ranker: Backend
    refiner: Backend
    embed: Backend


@dataclass
class TranslationResult:
    gql: str
    ranker: RankerOutput
    rewrite: RewriteResult
    refiner_input: RefinerInput
    refiner_prompt: str
    refiner_raw: str
    matches: list[AlignmentMatch] = field(default_factory=list)
    stage_timings: dict = field(default_factory=dict)

    def to_dict(self, timings: bool = False) -> dict:
        d = {
            "gql": self.gql,
            "ranker": self.ranker.to_dict(),
            "rewrite": {
                "rewritten_query": self.rewrite.rewritten_query,
                "substitutions": [list(s) for s in self.rewrite.substitutions],
                "unmatched": list(self.rewrite.unmatched),
            },
            "retrieved_facts": list(self.refiner_input.retrieved_facts),
            "refiner_raw": self.refiner_raw,
        }
        if timings:
            d["stage_timings"] = dict(self.stage_timings)
        return d


class Pipeline:
    """Reusable translator bound to one store, skeleton and backend set."""

    def __init__(self, store: GraphStore, skeleton: Skeleton, backends: Backends,
                 prompts: PromptSet | None = None, sampling: Sampling = Sampling(),
                 align: AlignParams = AlignParams()):
        self.store = store
        self.schema = store.schema
        self.skeleton = skeleton
        self.backends = backends
        self.prompts = prompts or default_prompts()
        self.sampling = sampling
        self.align = align
        self._index: list[CandidateItem] | None = None

    @property
    def index(self) -> list[CandidateItem]:
        if self._index is None:
            self._index = build_index(self.store)
        return self._index

    def translate(self, query: str) -> TranslationResult:
        timings = {}
        t0 = time.perf_counter()
        try:
            ranked = rank(self.schema, self.skeleton, query, self.backends.ranker, self.prompts, self.sampling)
        except Exception as exc:
            raise StageError(RANKER, exc) from exc
        t1 = time.perf_counter()
        timings[RANKER] = t1 - t0
        try:
            p = self.align
            matches = retrieve(query, self.index, self.backends.embed, p.tau1, p.k, p.span_ngrams)
            rewritten = rewrite(query, matches, self.schema, self.store, p.min_u2)
        except Exception as exc:
            raise StageError(REWRITER, exc) from exc
        t2 = time.perf_counter()
        timings[REWRITER] = t2 - t1
        try:
            inp = RefinerInput(
                render_code_schema(self.schema, only=ranked.schema_subset).text,
                render_skeleton(self.skeleton, list(ranked.crud_keywords) + list(ranked.clauses)),
                rewritten.rewritten_query,
                tuple(render_fact(m, self.store) for m in rewritten.applied),
            )
            request = refiner_request(inp, self.prompts, self.sampling)
            raw = self.backends.refiner.chat(request).content
            gql = extract_gql(raw)
        except Exception as exc:
            raise StageError(REFINER, exc) from exc
        timings[REFINER] = time.perf_counter() - t2
        return TranslationResult(gql, ranked, rewritten, inp, request.messages[-1].content, raw,
                                 list(matches), timings)


def translate(query: str, store: GraphStore, skeleton: Skeleton, backends: Backends,
              prompts: PromptSet | None = None, sampling: Sampling = Sampling(),
              align: AlignParams = AlignParams()) -> TranslationResult:
    """One-shot translation. Stage failures surface as :class:`StageError` with ``.stage`` set."""
    return Pipeline(store, skeleton, backends, prompts, sampling, align).translate(query)


__all__ = ["PromptSet", "Sampling", "AlignParams", "RankerOutput", "RefinerInput", "TranslationResult",
           "Backends", "Pipeline", "parse_ranker_reply", "validate_ranker_output", "rank", "refine",
           "extract_gql", "translate", "ranker_request", "refiner_request", "default_prompts"]
