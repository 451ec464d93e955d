"""Two-stage retrieval pipeline and the embedding store behind it.

Build: condense each passage against its paired question (stage 1),
encode the condensed text with the bi-encoder (stage 2), and keep the
vectors alongside a sparse index over the *full* preprocessed passages,
so every retrieval method sees the same preprocessing and differs only
in the scorer. Retrieval: sparse methods delegate to the inverted
index; dense methods rank every stored vector by cosine against the
encoded question (exhaustive scan -- exact and cheap at this scale).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import binio
from .condenser import condense_corpus
from .corpus import QAPair, StopwordSet, normalize, tokenize
from .encoder import EncoderModel, encode
from .errors import DataError, FormatError, VocabularyMismatchError
from .sparse import (
    SPARSE_METHODS,
    Bm25Params,
    InvertedIndex,
    LmParams,
    RankedList,
    build_index,
    rank,
)

__all__ = [
    "EmbeddingStore",
    "PipelineConfig",
    "Pipeline",
    "RETRIEVAL_METHODS",
    "rank_store",
    "save_store",
    "load_store",
    "import_external_embeddings",
]

STORE_MAGIC = b"SPQV"

RETRIEVAL_METHODS = SPARSE_METHODS + ("dense", "two-stage")


class EmbeddingStore:
    """doc_id -> vector map backed by a float32 matrix.

    Vectors are float32 because that is what the SPQV file stores;
    keeping them in float32 in memory means scores computed before a
    save and after a reload agree to the last bit.
    """

    def __init__(self, doc_ids: Sequence[int], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or len(doc_ids) != matrix.shape[0]:
            raise ValueError("doc_ids and matrix rows must correspond")
        order = np.argsort(np.asarray(doc_ids, dtype=np.int64), kind="stable")
        self.doc_ids = [int(doc_ids[i]) for i in order]
        self.matrix = matrix[order]
        self._row = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}
        if len(self._row) != len(self.doc_ids):
            raise ValueError("duplicate doc id in embedding store")

    @classmethod
    def from_dict(cls, vectors: dict[int, np.ndarray]) -> "EmbeddingStore":
        ids = sorted(vectors)
        return cls(ids, np.stack([vectors[i] for i in ids]))

    @property
    def count(self) -> int:
        return len(self.doc_ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def vector(self, doc_id: int) -> np.ndarray:
        if doc_id not in self._row:
            raise KeyError(f"unknown document id: {doc_id}")
        return self.matrix[self._row[doc_id]]


@dataclass
class PipelineConfig:
    """Knobs of the composed system; defaults follow the CLI defaults."""

    condenser_k: int = 5
    method: str = "two-stage"
    top_k: int = 10
    max_tokens: int = 256
    bm25: Bm25Params = field(default_factory=Bm25Params)
    lm: LmParams = field(default_factory=LmParams)
    stopwords_for_dense: bool = True

    def __post_init__(self):
        if self.condenser_k < 1 or self.top_k < 1 or self.max_tokens < 1:
            raise ValueError("condenser_k, top_k and max_tokens must be >= 1")
        if self.method not in RETRIEVAL_METHODS:
            raise ValueError(
                f"unknown retrieval method {self.method!r}; "
                f"expected one of {', '.join(RETRIEVAL_METHODS)}"
            )


def rank_store(store: EmbeddingStore, query_vector: np.ndarray, k: int) -> RankedList:
    """Top-k store entries by cosine against a query vector.

    Scores every vector (exhaustive scan); ties break by ascending doc
    id; zero-norm vectors on either side score 0.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = np.asarray(query_vector, dtype=np.float64)
    if query.shape != (store.dim,):
        raise ValueError(
            f"query vector has dimension {query.shape}, store is {store.dim}"
        )
    norm_q = float(np.linalg.norm(query))
    scores: RankedList = []
    for doc_id, row in zip(store.doc_ids, store.matrix):
        vec = row.astype(np.float64)
        norm_v = float(np.linalg.norm(vec))
        if norm_q == 0.0 or norm_v == 0.0:
            score = 0.0
        else:
            score = float(np.dot(query, vec) / (norm_q * norm_v))
        scores.append((doc_id, score))
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores[:k]


class Pipeline:
    """A built retrieval system: sparse index, vector store, encoder."""

    def __init__(
        self,
        config: PipelineConfig,
        index: InvertedIndex | None = None,
        store: EmbeddingStore | None = None,
        model: EncoderModel | None = None,
        stopwords: frozenset[str] | StopwordSet = frozenset(),
        splitter=None,
    ):
        self.config = config
        self.index = index
        self.store = store
        self.model = model
        self.stopwords = (
            stopwords.words if isinstance(stopwords, StopwordSet) else stopwords
        )
        self.splitter = splitter

    @classmethod
    def build(
        cls,
        pairs: Sequence[QAPair],
        model: EncoderModel | None,
        config: PipelineConfig | None = None,
        stopwords: frozenset[str] | StopwordSet = frozenset(),
        splitter=None,
    ) -> "Pipeline":
        """Index a corpus for every retrieval method at once.

        The sparse index always covers the full preprocessed passages.
        With a model present, passages are embedded into the store --
        condensed against their paired questions in two-stage mode,
        whole in dense mode. Raises VocabularyMismatchError when some
        passage has no token in the model's vocabulary.
        """
        config = config or PipelineConfig()
        if not pairs:
            raise ValueError("pipeline needs at least one pair")
        pipeline = cls(config, stopwords=stopwords, splitter=splitter)
        words = pipeline.stopwords
        docs = [
            tokenize(normalize(pair.answer), words, source_id=pair.id,
                     splitter=splitter)
            for pair in pairs
        ]
        pipeline.index = build_index(docs)
        if model is not None:
            pipeline.model = model
            pipeline.store = pipeline._build_store(pairs)
        return pipeline

    def _dense_stopwords(self) -> frozenset[str]:
        return self.stopwords if self.config.stopwords_for_dense else frozenset()

    def _build_store(self, pairs: Sequence[QAPair]) -> EmbeddingStore:
        if self.model.vocab is None:
            raise ValueError("encoder model has no vocabulary attached")
        if self.config.method == "two-stage":
            condensed = condense_corpus(
                pairs, self.config.condenser_k,
                stopwords=self.stopwords, params=self.config.bm25,
                splitter=self.splitter,
            )
            texts = [(c.doc_id, c.text) for c in condensed]
        else:
            texts = [(pair.id, normalize(pair.answer)) for pair in pairs]
        dense_words = self._dense_stopwords()
        vectors: dict[int, np.ndarray] = {}
        unknown = total = 0
        no_coverage: list[int] = []
        for doc_id, text in texts:
            tokens = tokenize(text, dense_words, splitter=self.splitter).tokens
            ids = self.model.vocab.ids(tokens, drop_unknown=True)
            unknown += len(tokens) - len(ids)
            total += len(tokens)
            ids = ids[: self.config.max_tokens]
            if not ids:
                no_coverage.append(doc_id)
                continue
            vectors[doc_id] = encode(self.model, ids).astype(np.float32)
        if no_coverage:
            rate = unknown / total if total else 1.0
            raise VocabularyMismatchError(
                f"{len(no_coverage)} passages have no token in the model "
                f"vocabulary (unknown-token rate {rate:.1%}; first affected "
                f"doc id {no_coverage[0]})"
            )
        return EmbeddingStore.from_dict(vectors)

    def encode_question(self, question: str) -> np.ndarray:
        """Preprocess and embed a question; errors if nothing survives."""
        if self.model is None or self.model.vocab is None:
            raise ValueError("pipeline has no encoder model loaded")
        tokens = tokenize(
            normalize(question), self._dense_stopwords(), splitter=self.splitter
        ).tokens
        ids = self.model.vocab.ids(tokens, drop_unknown=True)
        ids = ids[: self.config.max_tokens]
        if not ids:
            raise DataError(
                "question is empty after preprocessing (no known tokens)"
            )
        return encode(self.model, ids)

    def retrieve(
        self,
        question: str,
        method: str | None = None,
        top_k: int | None = None,
    ) -> RankedList:
        """Rank documents for a question with the chosen method.

        Dense and two-stage share the query path (they differ only in
        how the store was built); sparse methods delegate to the index.
        """
        method = method or self.config.method
        top_k = self.config.top_k if top_k is None else top_k
        if method in SPARSE_METHODS:
            if self.index is None:
                raise ValueError("pipeline has no sparse index loaded")
            tokens = tokenize(
                normalize(question), self.stopwords, splitter=self.splitter
            ).tokens
            if not tokens:
                raise DataError("question is empty after preprocessing")
            return rank(
                self.index, method, tokens, top_k,
                bm25=self.config.bm25, lm=self.config.lm,
            )
        if method in ("dense", "two-stage"):
            if self.store is None:
                raise ValueError("pipeline has no embedding store loaded")
            return rank_store(self.store, self.encode_question(question), top_k)
        raise ValueError(
            f"unknown retrieval method {method!r}; "
            f"expected one of {', '.join(RETRIEVAL_METHODS)}"
        )


def save_store(store: EmbeddingStore, path: str | Path) -> None:
    """Write the store in the SPQV binary format (see README for layout)."""
    buf = bytearray()
    buf.extend(STORE_MAGIC)
    binio.write_u32(buf, binio.FORMAT_VERSION)
    binio.write_u64(buf, store.count)
    binio.write_u32(buf, store.dim)
    for doc_id, row in zip(store.doc_ids, store.matrix):
        binio.write_u64(buf, doc_id)
        buf.extend(row.astype("<f4").tobytes())
    Path(path).write_bytes(bytes(buf))


def load_store(path: str | Path) -> EmbeddingStore:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"embedding store not found: {path}")
    reader = binio.Reader(path.read_bytes(), name=str(path))
    reader.expect_magic(STORE_MAGIC)
    reader.check_version(reader.read_u32())
    count = reader.read_u64()
    dim = reader.read_u32()
    doc_ids = []
    rows = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        doc_ids.append(reader.read_u64())
        rows[i] = np.frombuffer(reader.read_bytes(dim * 4), dtype="<f4")
    reader.expect_eof()
    return EmbeddingStore(doc_ids, rows)


def import_external_embeddings(
    path: str | Path, expected_dim: int | None = None
) -> EmbeddingStore:
    """Load passage vectors produced offline (e.g. by a pretrained encoder).

    The file must be in the SPQV format; pass expected_dim to enforce
    consistency with whatever will encode the queries.
    """
    store = load_store(path)
    if expected_dim is not None and store.dim != expected_dim:
        raise FormatError(
            f"{path}: store dimension {store.dim} != expected {expected_dim}"
        )
    return store
