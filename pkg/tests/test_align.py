import math

import pytest
from hypothesis import given, settings, strategies as st

from nl2gql.align import (ATTR_VALUE, EDGE_NAME, FALLBACK, NODE_VID, SEMANTIC, TAG_NAME, AlignmentMatch,
                          CandidateItem, build_index, char_score, cosine, levenshtein, query_tokens,
                          render_fact, retrieve, rewrite)
from nl2gql.backends import HashEmbeddingBackend
from nl2gql.errors import DimMismatch, EmptyInput

words = st.text(alphabet="abcxyz", max_size=8)


@pytest.mark.parametrize("a,b,d", [("", "", 0), ("", "abc", 3), ("kitten", "sitting", 3),
                                   ("flaw", "lawn", 2), ("Porzingis", "Kristaps Porzingis", 9)])
def test_levenshtein_known(a, b, d):
    assert levenshtein(a, b) == d == levenshtein(b, a)


@settings(max_examples=300, deadline=None)
@given(words, words, words)
def test_levenshtein_metric(a, b, c):
    assert levenshtein(a, b) == levenshtein(b, a)
    assert (levenshtein(a, b) == 0) == (a == b)
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)
    assert abs(len(a) - len(b)) <= levenshtein(a, b) <= max(len(a), len(b))


def test_char_score_values():
    assert char_score("Tim", "tim") == 6.0
    assert char_score("Porzingis", "Kristaps Porzingis") == pytest.approx(9 / 9)
    assert char_score("abc", "abd") == pytest.approx(3.0)
    with pytest.raises(EmptyInput):
        char_score("", "x")


@settings(max_examples=300, deadline=None)
@given(words.filter(bool), words.filter(bool))
def test_exact_match_dominates(a, b):
    if a.casefold() != b.casefold():
        assert char_score(a, b) < char_score(a, a)


def test_cosine():
    assert cosine([1, 0], [1, 0]) == 1.0
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([0, 0], [1, 1]) == 0.0
    assert cosine([1, 2], [-1, -2]) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(DimMismatch):
        cosine([1], [1, 2])


def test_query_tokens_trim_punctuation():
    assert [t for t, _, _ in query_tokens("Who does Porzingis follow?")] == ["Who", "does", "Porzingis", "follow"]
    q = "(Tim Duncan's) team..."
    for tok, lo, hi in query_tokens(q):
        assert q[lo:hi] == tok


def test_index_contents(demo_store):
    index = build_index(demo_store)
    kinds = {i.kind for i in index}
    assert kinds == {TAG_NAME, EDGE_NAME, NODE_VID, ATTR_VALUE}
    surfaces = {(i.surface, i.kind) for i in index}
    assert ("Kristaps Porzingis", ATTR_VALUE) in surfaces
    assert ("player149", NODE_VID) in surfaces
    assert ("follow", EDGE_NAME) in surfaces
    # int attributes are not indexed
    assert not any(i.kind == ATTR_VALUE and i.surface.isdigit() for i in index)


def test_retrieve_and_rewrite_porzingis(demo_store):
    index = build_index(demo_store)
    embed = HashEmbeddingBackend()
    q = "Who does Porzingis follow?"
    matches = retrieve(q, index, embed)
    assert all(m.stage == SEMANTIC for m in matches)
    assert all(m.u1 >= 1.0 for m in matches)
    surfaces = [m.candidate.surface for m in matches]
    assert "Kristaps Porzingis" in surfaces
    result = rewrite(q, matches, demo_store.schema, demo_store)
    assert "Kristaps Porzingis (attr_value: player.name of player149)" in result.rewritten_query
    assert ("Porzingis", "Kristaps Porzingis", ATTR_VALUE) in result.substitutions
    # idempotent on its own output
    again = rewrite(result.rewritten_query, matches, demo_store.schema, demo_store)
    assert again.rewritten_query == result.rewritten_query


def test_high_tau_falls_back(demo_store):
    index = build_index(demo_store)
    matches = retrieve("zzqx", index, HashEmbeddingBackend(), tau1=50.0, k=3)
    assert len(matches) == 3 and {m.stage for m in matches} == {FALLBACK}
    assert rewrite("zzqx", matches).rewritten_query == "zzqx"


def test_retrieve_rejects_bad_args(demo_store):
    with pytest.raises(EmptyInput):
        retrieve("x", [], HashEmbeddingBackend())
    with pytest.raises(ValueError):
        retrieve("x", build_index(demo_store), HashEmbeddingBackend(), k=0)


def test_k_caps_matches_per_span(demo_store):
    idx = build_index(demo_store)
    matches = retrieve("Tim Duncan", idx, HashEmbeddingBackend(), tau1=0.3, k=2)
    per_span = {}
    for m in matches:
        per_span[m.query_span] = per_span.get(m.query_span, 0) + 1
    assert max(per_span.values()) <= 2
    assert len({id(m.candidate) for m in matches}) == len(matches)


def _m(lo, hi, text, surface, u1, u2=0.9, kind=ATTR_VALUE, stage=SEMANTIC):
    return AlignmentMatch((0, 1), text, (lo, hi), CandidateItem(surface, kind, ("node", "v", "name")), u1, u2, stage)


def test_rewrite_prefers_higher_u1_and_avoids_overlap():
    q = "find Tim Duncan now"
    a = _m(5, 15, "Tim Duncan", "Tim Duncan", 20.0)
    b = _m(5, 8, "Tim", "Tim", 6.0)
    result = rewrite(q, [b, a])
    assert result.rewritten_query == "find Tim Duncan (attr_value: name of v) now"
    assert result.applied == [a]


def test_rewrite_drops_low_u2_and_hallucinated_schema_names(demo_store):
    q = "players teammate"
    low = _m(0, 7, "players", "player", 1.0, u2=0.1)
    ghost = AlignmentMatch((1, 2), "teammate", (8, 16), CandidateItem("teammate", EDGE_NAME, ("edge_type", "teammate")),
                           8.0, 1.0, SEMANTIC)
    result = rewrite(q, [low, ghost], demo_store.schema)
    assert result.rewritten_query == q


def test_unmatched_entity_like_tokens():
    result = rewrite("who is Zorblax 42", [])
    assert result.unmatched == ["Zorblax", "42"]


def test_render_fact():
    fact = render_fact(_m(0, 3, "tim", "Tim Duncan", 1.5, 0.75))
    assert fact == '"tim" -> "Tim Duncan" (attr_value: name of v; u1=1.500, u2=0.750, stage=semantic)'
