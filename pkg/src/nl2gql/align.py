"""Two-level alignment of query spans against graph items.

Level one scores spans against every indexed item with an edit-distance
ratio, ``min(len(Q), len(I)) / levenshtein(Q, I)``. Survivors are then ranked
by cosine similarity of their embeddings. The rewriter uses the best
non-overlapping matches to replace loose mentions ("Porzingis") with the
surface form stored in the graph ("Kristaps Porzingis") plus a type hint.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

from .backends import Backend, EmbeddingVector
from .errors import DimMismatch, EmptyInput
from .graph_store import GraphSchema, GraphStore

NODE_VID = "node_vid"
ATTR_VALUE = "attr_value"
TAG_NAME = "tag_name"
EDGE_NAME = "edge_name"

CHARACTER = "character"
SEMANTIC = "semantic"
FALLBACK = "fallback"


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character edits turning ``a`` into ``b``."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def char_score(q: str, item: str) -> float:
    """Character-level closeness; larger is closer.

    Exact matches (after case folding) score ``2 * min_len`` since the
    ratio is undefined at distance zero.
    """
    if not q or not item:
        raise EmptyInput("char_score needs two nonempty strings")
    q, item = q.casefold(), item.casefold()
    shortest = min(len(q), len(item))
    dist = levenshtein(q, item)
    if dist == 0:
        return 2.0 * shortest
    return shortest / dist


def _char_score_upper_bound(q: str, item: str) -> float:
    # levenshtein >= |len difference|
    shortest = min(len(q), len(item))
    gap = abs(len(q) - len(item))
    return math.inf if gap == 0 else shortest / gap


def cosine(u: EmbeddingVector | Sequence[float], v: EmbeddingVector | Sequence[float]) -> float:
    a = u.values if isinstance(u, EmbeddingVector) else tuple(u)
    b = v.values if isinstance(v, EmbeddingVector) else tuple(v)
    if len(a) != len(b):
        raise DimMismatch(f"cannot compare vectors of dim {len(a)} and {len(b)}")
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(x * x for x in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    value = math.fsum(x * y for x, y in zip(a, b)) / (na * nb)
    return max(-1.0, min(1.0, value))


@dataclass(frozen=True)
class CandidateItem:
    """One retrievable surface form.

    ``locator`` is ``("node", vid)`` for vids, ``("node", vid, attr)`` for
    vertex attribute values, ``("edge", etype, attr)`` for edge attribute
    values, and ``("tag", name)`` / ``("edge_type", name)`` for schema names.
    """

    surface: str
    kind: str
    locator: tuple

    def hint(self, store: GraphStore | None = None) -> str:
        loc = self.locator
        if self.kind == NODE_VID:
            tag = store.nodes[loc[1]].tag if store is not None and loc[1] in store.nodes else "vertex"
            return f"{self.kind}: {tag}"
        if self.kind == ATTR_VALUE and loc[0] == "node":
            if store is not None and loc[1] in store.nodes:
                return f"{self.kind}: {store.nodes[loc[1]].tag}.{loc[2]} of {loc[1]}"
            return f"{self.kind}: {loc[2]} of {loc[1]}"
        if self.kind == ATTR_VALUE:
            return f"{self.kind}: {loc[1]}.{loc[2]}"
        return f"{self.kind}: {loc[1]}"


@dataclass(frozen=True)
class AlignmentMatch:
    query_span: tuple[int, int]
    span_text: str
    char_span: tuple[int, int]
    candidate: CandidateItem
    u1: float
    u2: float
    stage: str


@dataclass
class RewriteResult:
    rewritten_query: str
    substitutions: list[tuple[str, str, str]] = field(default_factory=list)
    unmatched: list[str] = field(default_factory=list)
    applied: list[AlignmentMatch] = field(default_factory=list)


def build_index(store: GraphStore) -> list[CandidateItem]:
    """Every tag name, edge name, vid, and string attribute value in the store.

    Vertex attribute values are deduplicated per vertex only, so two players
    named alike stay distinct items. Edge attribute values describe relation
    kinds rather than instances and are deduplicated per (edge type, attr).
    """
    schema = store.schema
    items: list[CandidateItem] = []
    seen: set = set()

    def add(item: CandidateItem, dedup_key) -> None:
        if item.surface.strip() and dedup_key not in seen:
            seen.add(dedup_key)
            items.append(item)

    for t in schema.tags:
        add(CandidateItem(t.name, TAG_NAME, ("tag", t.name)), (t.name, TAG_NAME))
    for e in schema.edges:
        add(CandidateItem(e.name, EDGE_NAME, ("edge_type", e.name)), (e.name, EDGE_NAME))
    for vid in store.sorted_vids():
        node = store.nodes[vid]
        add(CandidateItem(vid, NODE_VID, ("node", vid)), (vid, NODE_VID))
        declared = schema.tag_attrs(node.tag)
        for attr in declared:
            value = node.attrs.get(attr)
            if declared[attr].dtype == "string" and isinstance(value, str):
                add(CandidateItem(value, ATTR_VALUE, ("node", vid, attr)), (value, ATTR_VALUE, vid))
    for edge in sorted(store.edges, key=lambda r: r.key):
        declared = schema.edge_attrs(edge.etype)
        for attr in declared:
            value = edge.attrs.get(attr)
            if declared[attr].dtype == "string" and isinstance(value, str):
                add(CandidateItem(value, ATTR_VALUE, ("edge", edge.etype, attr)),
                    (value, ATTR_VALUE, edge.etype, attr))
    return items


_CORE = re.compile(r"\w(?:.*\w)?")


def query_tokens(query: str) -> list[tuple[str, int, int]]:
    """Whitespace tokens with surrounding punctuation trimmed, as (text, start, end)."""
    out = []
    for m in re.finditer(r"\S+", query):
        core = _CORE.search(m.group())
        if core is None:
            continue
        start = m.start() + core.start()
        out.append((core.group(), start, start + len(core.group())))
    return out


def _spans(query: str, max_len: int):
    toks = query_tokens(query)
    for i in range(len(toks)):
        for n in range(1, max_len + 1):
            j = i + n
            if j > len(toks):
                break
            start, end = toks[i][1], toks[j - 1][2]
            yield (i, j), query[start:end], (start, end)


def retrieve(query: str, index: Sequence[CandidateItem], embed_backend: Backend,
             tau1: float = 1.0, k: int = 5, span_ngrams: int = 4) -> list[AlignmentMatch]:
    """Character filter, then semantic ranking, with a whole-query fallback.

    Every span of 1..``span_ngrams`` tokens is scored against every item;
    pairs with ``u1 >= tau1`` survive and are ranked by cosine ``u2`` (ties:
    higher ``u1``, shorter surface, lexicographic surface). At most ``k``
    matches are kept per span and each item is matched at most once. With no
    survivors, items are ranked by ``u2`` against the whole query instead.
    """
    if not index:
        raise EmptyInput("retrieve() needs a nonempty candidate index")
    if tau1 <= 0 or k <= 0 or span_ngrams <= 0:
        raise ValueError("tau1, k and span_ngrams must be positive")

    survivors = []
    for span, text, chars in _spans(query, span_ngrams):
        folded = text.casefold()
        for ci, item in enumerate(index):
            surface = item.surface.casefold()
            if _char_score_upper_bound(folded, surface) < tau1:
                continue
            u1 = char_score(text, item.surface)
            if u1 >= tau1:
                survivors.append((span, text, chars, ci, u1))

    if survivors:
        texts = sorted({s[1] for s in survivors} | {index[s[3]].surface for s in survivors})
        vectors = dict(zip(texts, embed_backend.embed(texts)))
        scored = []
        for span, text, chars, ci, u1 in survivors:
            item = index[ci]
            u2 = cosine(vectors[text], vectors[item.surface])
            scored.append((span, text, chars, ci, u1, u2))
        scored.sort(key=lambda s: (-s[5], -s[4], len(index[s[3]].surface), index[s[3]].surface, s[0], s[3]))
        per_span: dict[tuple, int] = {}
        used: set[int] = set()
        out = []
        for span, text, chars, ci, u1, u2 in scored:
            if ci in used or per_span.get(span, 0) >= k:
                continue
            used.add(ci)
            per_span[span] = per_span.get(span, 0) + 1
            out.append(AlignmentMatch(span, text, chars, index[ci], u1, u2, SEMANTIC))
        return out

    stripped = query.strip()
    if not stripped:
        return []
    ntok = len(query_tokens(query))
    surfaces = sorted({item.surface for item in index})
    vectors = dict(zip([stripped] + surfaces, embed_backend.embed([stripped] + surfaces)))
    ranked = []
    for ci, item in enumerate(index):
        u1 = char_score(stripped, item.surface)
        u2 = cosine(vectors[stripped], vectors[item.surface])
        ranked.append((ci, u1, u2))
    ranked.sort(key=lambda r: (-r[2], -r[1], len(index[r[0]].surface), index[r[0]].surface, r[0]))
    start = len(query) - len(query.lstrip())
    return [AlignmentMatch((0, ntok), stripped, (start, start + len(stripped)), index[ci], u1, u2, FALLBACK)
            for ci, u1, u2 in ranked[:k]]


def _replacement(match: AlignmentMatch, store: GraphStore | None) -> str:
    return f"{match.candidate.surface} ({match.candidate.hint(store)})"


def rewrite(query: str, matches: Sequence[AlignmentMatch], schema: GraphSchema | None = None,
            store: GraphStore | None = None, min_u2: float = 0.5) -> RewriteResult:
    """Replace matched spans with their stored surface plus a ``(kind: name)`` hint.

    Only span-level (non-fallback) matches with ``u2 >= min_u2`` are eligible. The
    non-overlapping set is chosen greedily by descending ``(u1, u2)``.
    Applying the result again with the same matches is a no-op.
    """
    eligible = [m for m in matches if m.stage != FALLBACK and m.u2 >= min_u2]
    if schema is not None:
        names = set(schema.names)
        eligible = [m for m in eligible
                    if m.candidate.kind not in (TAG_NAME, EDGE_NAME) or m.candidate.surface in names]
    eligible.sort(key=lambda m: (-m.u1, -m.u2, m.char_span, m.candidate.surface))
    chosen: list[AlignmentMatch] = []
    for m in eligible:
        lo, hi = m.char_span
        if any(lo < c.char_span[1] and c.char_span[0] < hi for c in chosen):
            continue
        chosen.append(m)

    text = query
    edits = []
    for m in sorted(chosen, key=lambda m: m.char_span[0]):
        repl = _replacement(m, store)
        lo, hi = m.char_span
        if text[lo:hi] == m.span_text and not text[lo:].startswith(repl):
            edits.append((lo, hi, repl, m))
        # otherwise the query no longer lines up with the match offsets
        # (already rewritten); leave it untouched
    result = []
    last = 0
    subs = []
    applied = []
    for lo, hi, repl, m in edits:
        result.append(text[last:lo])
        result.append(repl)
        last = hi
        subs.append((m.span_text, m.candidate.surface, m.candidate.kind))
        applied.append(m)
    result.append(text[last:])
    rewritten = "".join(result)

    covered = [m.char_span for m in chosen]
    unmatched = []
    for i, (tok, lo, hi) in enumerate(query_tokens(query)):
        entity_like = (i > 0 and tok[:1].isupper()) or any(ch.isdigit() for ch in tok)
        if entity_like and not any(lo < c[1] and c[0] < hi for c in covered):
            unmatched.append(tok)
    return RewriteResult(rewritten, subs, unmatched, applied)


def render_fact(match: AlignmentMatch, store: GraphStore | None = None) -> str:
    return (f'"{match.span_text}" -> "{match.candidate.surface}" ({match.candidate.hint(store)}; '
            f"u1={match.u1:.3f}, u2={match.u2:.3f}, stage={match.stage})")
