"""Stage 1: keep the passage sentences most relevant to a guide question.

Long answer passages blow past the encoder's maximum sequence length, so
each passage is reduced to its top-K sentences under BM25 against the
paired question, scored over a mini-index built from the passage's own
sentences. Kept sentences are re-emitted in original order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import QAPair, StopwordSet, TokenizedText, normalize, split_sentences, tokenize
from .errors import DataError
from .sparse import Bm25Params, bm25_score, build_index

__all__ = [
    "CondensedPassage",
    "condense",
    "condense_corpus",
    "save_condensed",
    "load_condensed",
]


@dataclass
class CondensedPassage:
    """Up to K sentences of one passage, in original passage order."""

    doc_id: int
    kept_sentences: list[str]
    guide_id: int | None = None

    @property
    def text(self) -> str:
        return " ".join(self.kept_sentences)


def condense(
    passage: str,
    guide_question: TokenizedText | None,
    k: int,
    doc_id: int = -1,
    guide_id: int | None = None,
    stopwords: frozenset[str] | StopwordSet = frozenset(),
    params: Bm25Params | None = None,
    splitter=None,
) -> CondensedPassage:
    """Select the k sentences of a passage most relevant to the guide.

    Sentences are scored independently with BM25 over a mini-index built
    from the passage's own sentences; ties (including the all-zero case
    where the guide shares no terms) fall back to earlier position. With
    no guide question the first k sentences are kept. Passages with at
    most k sentences pass through unchanged.
    """
    if k < 1:
        raise ValueError(f"condenser k must be >= 1, got {k}")
    sentences = split_sentences(normalize(passage))
    if not sentences:
        raise DataError("cannot condense an empty passage")
    if len(sentences) <= k:
        return CondensedPassage(doc_id, list(sentences), guide_id)
    if guide_question is None:
        return CondensedPassage(doc_id, sentences[:k], guide_id)
    docs = [
        tokenize(sent, stopwords=stopwords, source_id=pos, splitter=splitter)
        for pos, sent in enumerate(sentences)
    ]
    mini_index = build_index(docs)
    params = params or Bm25Params()
    scored = [
        (pos, bm25_score(mini_index, params, guide_question.tokens, pos))
        for pos in range(len(sentences))
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    kept = sorted(pos for pos, _ in scored[:k])
    return CondensedPassage(doc_id, [sentences[pos] for pos in kept], guide_id)


def condense_corpus(
    pairs: Sequence[QAPair],
    k: int,
    stopwords: frozenset[str] | StopwordSet = frozenset(),
    params: Bm25Params | None = None,
    splitter=None,
) -> list[CondensedPassage]:
    """Condense every answer passage against its own paired question."""
    out = []
    for pair in pairs:
        guide = tokenize(normalize(pair.question), stopwords=stopwords,
                         source_id=pair.id, splitter=splitter)
        try:
            out.append(
                condense(
                    pair.answer,
                    guide,
                    k,
                    doc_id=pair.id,
                    guide_id=pair.id,
                    stopwords=stopwords,
                    params=params,
                    splitter=splitter,
                )
            )
        except (DataError, ValueError) as exc:
            raise DataError(f"pair {pair.id}: {exc}") from exc
    return out


def save_condensed(passages: Sequence[CondensedPassage], path: str | Path) -> None:
    """Persist condensed passages as JSONL: {"index", "guide", "sentences"}."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for passage in passages:
            fh.write(
                json.dumps(
                    {
                        "index": passage.doc_id,
                        "guide": passage.guide_id,
                        "sentences": passage.kept_sentences,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_condensed(path: str | Path) -> list[CondensedPassage]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"condensed corpus not found: {path}")
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                obj = json.loads(line)
                out.append(
                    CondensedPassage(
                        doc_id=obj["index"],
                        kept_sentences=list(obj["sentences"]),
                        guide_id=obj["guide"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad condensed record") from exc
    return out
