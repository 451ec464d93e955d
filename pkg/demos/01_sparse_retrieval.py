#!/usr/bin/env python3
"""Sparse retrieval walkthrough: one index, three scorers.

Builds an inverted index over a handful of toy passages and shows how
BM25, TF-IDF cosine and the smoothed query-likelihood model score and
rank the same query.
"""

from qasearch import (
    Bm25Params,
    LmParams,
    bm25_score,
    build_index,
    cosine,
    idf,
    lm_score,
    normalize,
    rank,
    tfidf_vector,
    tokenize,
)

passages = {
    0: "The doctor recommends rest and fluids for mild fever.",
    1: "Vaccination schedules for children are published yearly.",
    2: "Persistent fever in children may require a blood test.",
    3: "Allergic reactions to antibiotics are rare but serious.",
}

# one shared preprocessing path: lowercase, collapse whitespace, strip
# punctuation from token edges
docs = [
    tokenize(normalize(text), source_id=doc_id)
    for doc_id, text in passages.items()
]
index = build_index(docs)
print(f"indexed {index.n_docs} passages, avg length {index.avg_len:.2f} tokens")

query = tokenize(normalize("fever in children")).tokens
print(f"\nquery tokens: {query}")

# IDF makes rare terms count: 'fever' appears in 2 of 4 passages
for term in query:
    print(f"  idf({term!r}) = {idf(index, term):.4f}")

print("\nper-document scores")
print(f"{'doc':>3}  {'bm25':>8}  {'tfidf-cos':>9}  {'lm':>9}")
for doc_id, text in passages.items():
    doc_tokens = tokenize(normalize(text)).tokens
    bm25 = bm25_score(index, Bm25Params(), query, doc_id)
    tcos = cosine(tfidf_vector(index, query), tfidf_vector(index, doc_tokens))
    lm = lm_score(index, LmParams(alpha=0.1), query, doc_id)
    print(f"{doc_id:>3}  {bm25:>8.4f}  {tcos:>9.4f}  {lm:>9.4f}")

# rank() runs the same scorers over every document with a deterministic
# tie-break (ascending doc id)
print("\ntop-2 rankings")
for method in ("bm25", "tfidf-cos", "lm"):
    ranked = rank(index, method, query, 2)
    print(f"  {method:<10} {ranked}")
