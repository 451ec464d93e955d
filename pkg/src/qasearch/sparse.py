"""Inverted index and the three sparse scorers.

Scorers share one index: BM25 with the smoothed-IDF factor, TF-IDF
cosine over bag-of-words vectors, and a Jelinek-Mercer smoothed unigram
query-likelihood model. Ranking is an exhaustive scan with a fixed
tie-break (ascending doc id) so results are deterministic and easy to
verify against brute-force re-scoring.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import binio
from .corpus import TokenizedText, smoothed_idf
from .errors import FormatError

__all__ = [
    "InvertedIndex",
    "Bm25Params",
    "LmParams",
    "RankedList",
    "SPARSE_METHODS",
    "build_index",
    "idf",
    "term_frequency",
    "bm25_score",
    "tfidf_vector",
    "cosine",
    "lm_score",
    "rank",
    "save_index",
    "load_index",
]

# Ordered (doc_id, score) pairs, descending score, ties by ascending id.
RankedList = list[tuple[int, float]]

SPARSE_METHODS = ("bm25", "tfidf-cos", "lm")

INDEX_MAGIC = b"SPQI"


@dataclass(frozen=True)
class Bm25Params:
    """k balances term frequency against IDF; b scales length normalization."""

    k: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"BM25 k must be positive, got {self.k}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"BM25 b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class LmParams:
    """alpha is the weight on corpus statistics in Jelinek-Mercer smoothing."""

    alpha: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"LM alpha must be in [0, 1], got {self.alpha}")


@dataclass
class InvertedIndex:
    """Term postings plus the corpus statistics the scorers need.

    postings lists are sorted by doc id; doc_len keeps every document,
    including empty ones that appear in no posting.
    """

    postings: dict[str, list[tuple[int, int]]]
    doc_len: dict[int, int]
    n_docs: int
    df: dict[str, int]
    avg_len: float
    collection_tf: dict[str, int]
    total_tokens: int


def build_index(docs: Sequence[TokenizedText]) -> InvertedIndex:
    """Build an immutable index over tokenized documents.

    Documents must carry unique source ids; empty documents are allowed
    and recorded with length zero.
    """
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_len: dict[int, int] = {}
    for doc in docs:
        if doc.source_id in doc_len:
            raise ValueError(f"duplicate document id: {doc.source_id}")
        doc_len[doc.source_id] = len(doc.tokens)
        for term, tf in sorted(Counter(doc.tokens).items()):
            postings.setdefault(term, []).append((doc.source_id, tf))
    for plist in postings.values():
        plist.sort()
    df = {term: len(plist) for term, plist in postings.items()}
    collection_tf = {
        term: sum(tf for _, tf in plist) for term, plist in postings.items()
    }
    total_tokens = sum(doc_len.values())
    n_docs = len(doc_len)
    avg_len = total_tokens / n_docs if n_docs else 0.0
    return InvertedIndex(
        postings=postings,
        doc_len=doc_len,
        n_docs=n_docs,
        df=df,
        avg_len=avg_len,
        collection_tf=collection_tf,
        total_tokens=total_tokens,
    )


def idf(index: InvertedIndex, term: str) -> float:
    """Smoothed IDF of a term; unseen terms use df = 0."""
    return smoothed_idf(index.n_docs, index.df.get(term, 0))


def term_frequency(index: InvertedIndex, term: str, doc_id: int) -> int:
    """Frequency of term in the given document (0 when absent)."""
    plist = index.postings.get(term)
    if not plist:
        return 0
    pos = bisect_left(plist, (doc_id, 0))
    if pos < len(plist) and plist[pos][0] == doc_id:
        return plist[pos][1]
    return 0


def bm25_score(
    index: InvertedIndex,
    params: Bm25Params,
    query: Sequence[str],
    doc_id: int,
) -> float:
    """BM25 score of one document for a query.

    Sum over *distinct* query terms of
    idf(t) * tf * (k + 1) / (tf + k * (1 - b + b * len / avg_len)); terms
    absent from the document contribute 0, so the score is never negative.
    """
    if doc_id not in index.doc_len:
        raise KeyError(f"unknown document id: {doc_id}")
    length = index.doc_len[doc_id]
    norm = 1.0 - params.b
    if index.avg_len > 0:
        norm += params.b * length / index.avg_len
    score = 0.0
    for term in dict.fromkeys(query):
        tf = term_frequency(index, term, doc_id)
        if tf == 0:
            continue
        score += idf(index, term) * tf * (params.k + 1.0) / (tf + params.k * norm)
    return score


def tfidf_vector(index: InvertedIndex, tokens: Sequence[str]) -> dict[str, float]:
    """Sparse TF-IDF vector of a token list: weight(t) = tf * idf."""
    return {term: tf * idf(index, term) for term, tf in Counter(tokens).items()}


def cosine(u: dict[str, float], v: dict[str, float]) -> float:
    """Cosine of two sparse vectors; 0 when either has zero norm.

    Terms are visited in sorted order so the result depends only on the
    mappings, not on dict insertion order; that keeps the function
    exactly symmetric and reproducible across construction paths.
    """
    norm_u = math.sqrt(sum(u[t] * u[t] for t in sorted(u)))
    norm_v = math.sqrt(sum(v[t] * v[t] for t in sorted(v)))
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    dot = sum(u[t] * v[t] for t in sorted(set(u) & set(v)))
    return dot / (norm_u * norm_v)


def lm_score(
    index: InvertedIndex,
    params: LmParams,
    query: Sequence[str],
    doc_id: int,
) -> float:
    """Smoothed unigram query log-likelihood of one document.

    Sum over query tokens (with multiplicity) of
    ln[(1 - alpha) * tf/|D| + alpha * ctf/total]. Computed in log space
    to avoid underflow on long queries. A token unseen in both the
    document and the corpus makes the score -inf, ranking the document
    behind every finite-scoring one.
    """
    if doc_id not in index.doc_len:
        raise KeyError(f"unknown document id: {doc_id}")
    if index.total_tokens <= 0:
        raise ValueError("language model scoring needs a non-empty corpus")
    length = index.doc_len[doc_id]
    score = 0.0
    for token in query:
        p_doc = term_frequency(index, token, doc_id) / length if length else 0.0
        p_col = index.collection_tf.get(token, 0) / index.total_tokens
        prob = (1.0 - params.alpha) * p_doc + params.alpha * p_col
        if prob <= 0.0:
            return float("-inf")
        score += math.log(prob)
    return score


def _doc_tfidf_vectors(index: InvertedIndex) -> dict[int, dict[str, float]]:
    # One pass over the postings builds every document vector at once.
    vectors: dict[int, dict[str, float]] = {d: {} for d in index.doc_len}
    for term, plist in index.postings.items():
        weight = idf(index, term)
        for doc_id, tf in plist:
            vectors[doc_id][term] = tf * weight
    return vectors


def rank(
    index: InvertedIndex,
    method: str,
    query: Sequence[str],
    k: int,
    bm25: Bm25Params | None = None,
    lm: LmParams | None = None,
) -> RankedList:
    """Top-k documents under one of the sparse scorers.

    Every document is scored (exhaustive scan) and sorted by descending
    score with ties broken by ascending doc id; the result has
    min(k, N) entries.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if method == "bm25":
        params = bm25 or Bm25Params()
        scores = [
            (doc_id, bm25_score(index, params, query, doc_id))
            for doc_id in index.doc_len
        ]
    elif method == "tfidf-cos":
        query_vec = tfidf_vector(index, query)
        doc_vecs = _doc_tfidf_vectors(index)
        scores = [
            (doc_id, cosine(query_vec, doc_vecs[doc_id]))
            for doc_id in index.doc_len
        ]
    elif method == "lm":
        params_lm = lm or LmParams()
        scores = [
            (doc_id, lm_score(index, params_lm, query, doc_id))
            for doc_id in index.doc_len
        ]
    else:
        raise ValueError(f"unknown sparse method: {method!r}")
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores[:k]


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Write the index in the SPQI binary format (see README for layout).

    Documents and terms are emitted in canonical order (ascending id,
    lexicographic term) so identical indexes produce identical bytes.
    """
    buf = bytearray()
    buf.extend(INDEX_MAGIC)
    binio.write_u32(buf, binio.FORMAT_VERSION)
    binio.write_u64(buf, index.n_docs)
    binio.write_f64(buf, index.avg_len)
    prev = 0
    for doc_id in sorted(index.doc_len):
        binio.write_varint(buf, doc_id - prev)
        binio.write_varint(buf, index.doc_len[doc_id])
        prev = doc_id
    binio.write_u64(buf, len(index.postings))
    for term in sorted(index.postings):
        encoded = term.encode("utf-8")
        binio.write_varint(buf, len(encoded))
        buf.extend(encoded)
        plist = index.postings[term]
        binio.write_varint(buf, len(plist))
        prev = 0
        for doc_id, tf in plist:
            binio.write_varint(buf, doc_id - prev)
            binio.write_varint(buf, tf)
            prev = doc_id
    Path(path).write_bytes(bytes(buf))


def load_index(path: str | Path) -> InvertedIndex:
    """Read an SPQI file back into an InvertedIndex."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"index file not found: {path}")
    reader = binio.Reader(path.read_bytes(), name=str(path))
    reader.expect_magic(INDEX_MAGIC)
    reader.check_version(reader.read_u32())
    n_docs = reader.read_u64()
    avg_len = reader.read_f64()
    doc_len: dict[int, int] = {}
    prev = 0
    for _ in range(n_docs):
        prev += reader.read_varint()
        doc_len[prev] = reader.read_varint()
    postings: dict[str, list[tuple[int, int]]] = {}
    for _ in range(reader.read_u64()):
        term = reader.read_bytes(reader.read_varint()).decode("utf-8")
        count = reader.read_varint()
        plist = []
        prev = 0
        for _ in range(count):
            prev += reader.read_varint()
            plist.append((prev, reader.read_varint()))
        postings[term] = plist
    reader.expect_eof()
    df = {term: len(plist) for term, plist in postings.items()}
    collection_tf = {
        term: sum(tf for _, tf in plist) for term, plist in postings.items()
    }
    return InvertedIndex(
        postings=postings,
        doc_len=doc_len,
        n_docs=n_docs,
        df=df,
        avg_len=avg_len,
        collection_tf=collection_tf,
        total_tokens=sum(doc_len.values()),
    )
