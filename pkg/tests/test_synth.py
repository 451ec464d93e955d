"""Structural guarantees of the synthetic corpora."""

import pytest

from qasearch.corpus import normalize, tokenize
from qasearch.evalkit import lexical_overlap
from qasearch.synth import long_passage_corpus, separable_corpus, zero_overlap_corpus


def token_types(text):
    return set(tokenize(normalize(text)).tokens)


class TestSeparableCorpus:
    def test_topic_vocabularies_are_disjoint(self):
        pairs = separable_corpus(20)
        vocabularies = [
            token_types(p.question) | token_types(p.answer) for p in pairs
        ]
        for i in range(len(pairs)):
            for j in range(i + 1, len(pairs)):
                assert not vocabularies[i] & vocabularies[j]

    def test_every_pair_is_high_overlap(self):
        for pair in separable_corpus(10):
            assert lexical_overlap(
                tokenize(normalize(pair.question)),
                tokenize(normalize(pair.answer)),
            ) == 3

    def test_shared_terms_unique_to_gold(self):
        pairs = separable_corpus(10)
        for pair in pairs:
            shared = token_types(pair.question) & token_types(pair.answer)
            for other in pairs:
                if other.id != pair.id:
                    assert not shared & token_types(other.answer)


class TestZeroOverlapCorpus:
    def test_gold_overlap_is_zero(self):
        for pair in zero_overlap_corpus(12):
            assert lexical_overlap(
                tokenize(normalize(pair.question)),
                tokenize(normalize(pair.answer)),
            ) == 0

    def test_every_question_token_occurs_in_some_passage(self):
        pairs = zero_overlap_corpus(12)
        collection = set()
        for pair in pairs:
            collection |= token_types(pair.answer)
        for pair in pairs:
            assert token_types(pair.question) <= collection

    def test_next_passage_contains_all_question_tokens(self):
        pairs = zero_overlap_corpus(12)
        for i, pair in enumerate(pairs):
            successor = pairs[(i + 1) % len(pairs)]
            assert token_types(pair.question) <= token_types(successor.answer)

    def test_minimum_size_enforced(self):
        with pytest.raises(ValueError):
            zero_overlap_corpus(1)


class TestLongPassageCorpus:
    def test_long_share_exceeds_two_thirds(self):
        pairs = long_passage_corpus()
        lengths = [len(normalize(p.answer).split()) for p in pairs]
        over = sum(1 for length in lengths if length > 300)
        assert over / len(pairs) > 0.65

    def test_ids_are_unique_and_dense(self):
        pairs = long_passage_corpus()
        assert sorted(p.id for p in pairs) == list(range(len(pairs)))
