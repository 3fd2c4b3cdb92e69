"""How the combined result similarity reacts to small differences in output.

    python3 demos/04_similarity.py
"""

from nl2gql.evaluation import SimilarityParams, bm25_cosine, combined_similarity, jaccard_term, tokenize

gold = "name\nTim Duncan\nTony Parker\nManu Ginobili"
cases = {
    "identical": gold,
    "reordered rows": "name\nManu Ginobili\nTim Duncan\nTony Parker",
    "one row missing": "name\nTim Duncan\nTony Parker",
    "extra row": gold + "\nYao Ming",
    "different column name": "player\nTim Duncan\nTony Parker\nManu Ginobili",
    "unrelated": "year\n2002",
}

params = SimilarityParams()
print(f"alpha={params.alpha} beta={params.beta} theta={params.theta}\n")
print(f"{'case':<24}{'jaccard':>9}{'bm25':>9}{'combined':>10}")
for label, text in cases.items():
    t1, t2 = tokenize(gold), tokenize(text)
    jac = jaccard_term(t1, t2)
    bm = bm25_cosine(t1, t2, params.k1, params.b)
    sim = combined_similarity(gold, text, params)
    print(f"{label:<24}{jac:>9.3f}{bm:>9.3f}{sim:>10.3f}")

print("\nThe overlap term is normalised by the gold token count, so an extra row")
print("costs nothing there while a missing row does. Without a semantic scorer the")
print("last term is exact text equality, which is why only 'identical' reaches theta.")
