"""Deterministic synthetic QA corpora for experiments and verification.

Real medical QA data cannot ship with the package, so these generators
build small corpora with controlled lexical structure: topic-disjoint
vocabularies (every sparse and dense method should succeed), zero
question/answer overlap (sparse methods are structurally blind, only a
trained encoder can succeed), and over-length passages for exercising
the sentence condenser. Construction is fully deterministic so tests
can freeze expected values.
"""

from __future__ import annotations

from .corpus import QAPair

__all__ = [
    "separable_corpus",
    "zero_overlap_corpus",
    "long_passage_corpus",
]


def separable_corpus(n_pairs: int = 50) -> list[QAPair]:
    """Topic-disjoint pairs whose questions share three terms with their gold.

    Topic i's vocabulary is unique to pair i, and the shared terms
    t{i}w0..2 occur in no other passage, so BM25 must rank the gold
    passage first; the shared vocabulary also gives the dense encoder a
    learnable signal. Answers run to seven sentences so a condenser with
    K = 5 genuinely trims them.
    """
    pairs = []
    for i in range(n_pairs):
        question = f"t{i}w0 t{i}w1 t{i}w2 t{i}q0 t{i}q1"
        answer = (
            f"t{i}w0 t{i}d0 t{i}d1. "
            f"t{i}f0 t{i}f1. "
            f"t{i}w1 t{i}d2 t{i}d3. "
            f"t{i}f2 t{i}f3. "
            f"t{i}w2 t{i}d4 t{i}d5. "
            f"t{i}f4 t{i}f5. "
            f"t{i}w0 t{i}w1 t{i}d6."
        )
        pairs.append(QAPair(id=i, question=question, answer=answer))
    return pairs


def zero_overlap_corpus(n_pairs: int = 50) -> list[QAPair]:
    """Pairs whose question and gold passage share no token at all (X = 0).

    Passage i quotes the tokens of question (i-1) % n and carries its own
    mark{i}, which question (i-1) % n also mentions. Every token of
    question i therefore occurs in passage (i+1) % n and nowhere else:
    the gold passage scores zero under any bag-of-words method (and
    strictly below passage (i+1) % n under the smoothed language model),
    so sparse methods can never rank it first -- not even by tie-break.
    A bi-encoder trained on these pairs can still learn the
    question-dialect/answer-dialect pairing.
    """
    if n_pairs < 2:
        raise ValueError("zero-overlap corpus needs at least 2 pairs")
    pairs = []
    for i in range(n_pairs):
        previous = (i - 1) % n_pairs
        question = f"z{i}q0 z{i}q1 z{i}q2 z{i}q3 mark{(i + 1) % n_pairs}"
        answer = (
            f"z{i}a0 z{i}a1 z{i}a2. "
            f"z{i}a3 z{i}a4 z{i}a5 mark{i}. "
            f"z{previous}q0 z{previous}q1 z{previous}q2 z{previous}q3."
        )
        pairs.append(QAPair(id=i, question=question, answer=answer))
    return pairs


def long_passage_corpus(
    n_long: int = 14,
    n_short: int = 6,
    sentences_per_long: int = 10,
    words_per_sentence: int = 35,
) -> list[QAPair]:
    """Mixed corpus where the long passages exceed the encoder length.

    Long passages have sentences_per_long sentences of words_per_sentence
    tokens (350 tokens by default, past both the 256-token encoder limit
    and the 300-token mark). Sentence j repeats the question's key terms
    j % 3 and j % 2 times, so per-sentence BM25 scores differ and top-K
    selection is non-trivial. Short passages stay well under the limit.
    """
    pairs = []
    for i in range(n_long):
        question = f"p{i}key0 p{i}key1 p{i}ask0"
        sentence_texts = []
        for j in range(sentences_per_long):
            words = [f"p{i}key0"] * (j % 3) + [f"p{i}key1"] * (j % 2)
            filler = words_per_sentence - len(words)
            words += [f"p{i}s{j}w{t}" for t in range(filler)]
            sentence_texts.append(" ".join(words) + ".")
        pairs.append(
            QAPair(id=i, question=question, answer=" ".join(sentence_texts))
        )
    for i in range(n_long, n_long + n_short):
        question = f"p{i}key0 p{i}ask0"
        answer = (
            f"p{i}key0 p{i}b0 p{i}b1 p{i}b2. "
            f"p{i}b3 p{i}b4 p{i}b5. "
            f"p{i}b6 p{i}b7 p{i}key0."
        )
        pairs.append(QAPair(id=i, question=question, answer=answer))
    return pairs
