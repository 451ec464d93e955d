"""Inverted index, the three sparse scorers, ranking and persistence.

Reference scorers here are written straight from the score definitions
over raw token lists, with no inverted index, so they fail independently
of the implementation they check.
"""

import math

import numpy as np
import pytest

from qasearch.corpus import TokenizedText
from qasearch.errors import FormatError
from qasearch.sparse import (
    Bm25Params,
    LmParams,
    bm25_score,
    build_index,
    cosine,
    idf,
    lm_score,
    load_index,
    rank,
    save_index,
    tfidf_vector,
)

# ---------------------------------------------------------------------------
# reference implementations (no index structure)


def ref_idf(doc_tokens, term):
    n = len(doc_tokens)
    df = sum(1 for tokens in doc_tokens if term in tokens)
    return math.log((n - df + 0.5) / (df + 0.5) + 1.0)


def ref_bm25(doc_tokens, doc_ids, query, target, k=1.2, b=0.75):
    lengths = [len(tokens) for tokens in doc_tokens]
    avg = sum(lengths) / len(lengths) if lengths else 0.0
    tokens = doc_tokens[doc_ids.index(target)]
    score = 0.0
    for term in sorted(set(query)):
        tf = tokens.count(term)
        if tf == 0:
            continue
        norm = 1.0 - b + (b * len(tokens) / avg if avg > 0 else 0.0)
        score += ref_idf(doc_tokens, term) * tf * (k + 1.0) / (tf + k * norm)
    return score


def ref_tfidf_cosine(doc_tokens, doc_ids, query, target):
    def vec(tokens):
        return {
            t: tokens.count(t) * ref_idf(doc_tokens, t) for t in set(tokens)
        }

    u, v = vec(list(query)), vec(doc_tokens[doc_ids.index(target)])
    dot = sum(w * v.get(t, 0.0) for t, w in u.items())
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    return dot / (nu * nv) if nu > 0 and nv > 0 else 0.0


def ref_lm(doc_tokens, doc_ids, query, target, alpha=0.1):
    tokens = doc_tokens[doc_ids.index(target)]
    total = sum(len(d) for d in doc_tokens)
    score = 0.0
    for token in query:
        p_doc = tokens.count(token) / len(tokens) if tokens else 0.0
        p_col = sum(d.count(token) for d in doc_tokens) / total
        prob = (1.0 - alpha) * p_doc + alpha * p_col
        if prob <= 0.0:
            return float("-inf")
        score += math.log(prob)
    return score


def make_index(docs_by_id):
    return build_index(
        [TokenizedText(list(tokens), source_id=i) for i, tokens in docs_by_id]
    )


TWO_DOCS = [(1, ["a", "b", "a"]), (2, ["b", "c"])]


def random_corpus(rng, n_docs, vocab_size=30, max_len=12):
    docs = []
    for i in range(n_docs):
        length = int(rng.integers(0, max_len + 1))
        docs.append((i, [f"w{int(t)}" for t in rng.integers(0, vocab_size, length)]))
    return docs


# ---------------------------------------------------------------------------


class TestBuildIndex:
    def test_empty(self):
        index = make_index([])
        assert index.n_docs == 0 and index.avg_len == 0.0

    def test_single_doc_counts(self):
        index = make_index([(1, ["a", "b", "a"])])
        assert index.df["a"] == 1
        assert index.postings["a"] == [(1, 2)]
        assert index.avg_len == 3.0

    def test_two_doc_counts(self):
        index = make_index(TWO_DOCS)
        assert index.avg_len == 2.5
        assert index.df["b"] == 2
        assert index.collection_tf["b"] == 2
        assert index.total_tokens == 5

    def test_duplicate_doc_id_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            make_index([(1, ["a"]), (1, ["b"])])

    def test_empty_document_allowed(self):
        index = make_index([(1, []), (2, ["a"])])
        assert index.doc_len[1] == 0
        assert index.n_docs == 2

    def test_invariants_on_random_corpora(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            docs = random_corpus(rng, int(rng.integers(1, 30)))
            index = make_index(docs)
            for term, plist in index.postings.items():
                assert index.df[term] == len(plist)
                assert index.collection_tf[term] == sum(tf for _, tf in plist)
            assert index.avg_len == sum(index.doc_len.values()) / index.n_docs


class TestIdf:
    def test_half_df(self):
        index = make_index(TWO_DOCS)
        assert idf(index, "a") == pytest.approx(math.log(2.0), abs=1e-12)

    def test_full_df(self):
        index = make_index(TWO_DOCS)
        assert idf(index, "b") == pytest.approx(math.log(1.2), abs=1e-12)

    def test_empty_index(self):
        index = make_index([])
        assert idf(index, "x") == pytest.approx(math.log(2.0), abs=1e-12)

    def test_unseen_term_positive(self):
        index = make_index(TWO_DOCS)
        assert idf(index, "zzz") > 0.0


class TestBm25:
    def test_worked_example(self):
        # idf(a) = ln 2; tf = 2, |D| = 3, avg = 2.5:
        # ln 2 * (2 * 2.2) / (2 + 1.2 * (0.25 + 0.9)) ~= 0.9023
        index = make_index(TWO_DOCS)
        expected = math.log(2.0) * (2 * 2.2) / (2 + 1.2 * (1 - 0.75 + 0.75 * 3 / 2.5))
        got = bm25_score(index, Bm25Params(), ["a"], 1)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.9023, abs=1e-4)

    def test_repeated_query_term_counts_once(self):
        index = make_index(TWO_DOCS)
        assert bm25_score(index, Bm25Params(), ["a", "a"], 1) == bm25_score(
            index, Bm25Params(), ["a"], 1
        )

    def test_absent_terms_contribute_zero(self):
        index = make_index(TWO_DOCS)
        assert bm25_score(index, Bm25Params(), ["c"], 1) == 0.0
        assert bm25_score(index, Bm25Params(), ["x", "y"], 1) == 0.0

    def test_additive_over_distinct_terms(self):
        index = make_index(TWO_DOCS)
        params = Bm25Params()
        combined = bm25_score(index, params, ["a", "b"], 1)
        separate = bm25_score(index, params, ["a"], 1) + bm25_score(
            index, params, ["b"], 1
        )
        assert combined == separate

    def test_unknown_doc_id(self):
        index = make_index(TWO_DOCS)
        with pytest.raises(KeyError):
            bm25_score(index, Bm25Params(), ["a"], 99)

    def test_non_negative_random(self):
        rng = np.random.default_rng(5)
        docs = random_corpus(rng, 25)
        index = make_index(docs)
        for _ in range(50):
            query = [f"w{int(t)}" for t in rng.integers(0, 35, 4)]
            doc_id = int(rng.integers(0, 25))
            assert bm25_score(index, Bm25Params(), query, doc_id) >= 0.0

    def test_monotone_in_term_frequency(self):
        # Same doc length and df across variants; only tf of 'a' grows.
        params = Bm25Params()
        scores = []
        for tf in range(1, 7):
            doc = ["a"] * tf + [f"pad{i}" for i in range(6 - tf)]
            index = make_index([(1, doc), (2, ["b", "c"])])
            scores.append(bm25_score(index, params, ["a"], 1))
        assert scores == sorted(scores)

    def test_matches_reference_on_20_doc_corpus(self):
        rng = np.random.default_rng(17)
        docs = random_corpus(rng, 20, vocab_size=15, max_len=10)
        docs = [(i, tokens if tokens else ["filler"]) for i, tokens in docs]
        index = make_index(docs)
        ids = [i for i, _ in docs]
        tokens = [t for _, t in docs]
        for _ in range(60):
            query = [f"w{int(t)}" for t in rng.integers(0, 18, int(rng.integers(1, 6)))]
            doc_id = int(rng.integers(0, 20))
            assert bm25_score(index, Bm25Params(), query, doc_id) == pytest.approx(
                ref_bm25(tokens, ids, query, doc_id), abs=1e-10
            )

    def test_params_validation(self):
        with pytest.raises(ValueError):
            Bm25Params(k=0.0)
        with pytest.raises(ValueError):
            Bm25Params(b=1.5)


class TestTfidfCosine:
    def test_empty_text_empty_vector(self):
        index = make_index(TWO_DOCS)
        assert tfidf_vector(index, []) == {}

    def test_weight_is_tf_times_idf(self):
        index = make_index(TWO_DOCS)
        vec = tfidf_vector(index, ["a", "a"])
        assert vec == {"a": pytest.approx(2 * math.log(2.0), abs=1e-12)}

    def test_unseen_term_has_positive_weight(self):
        index = make_index(TWO_DOCS)
        vec = tfidf_vector(index, ["zzz"])
        assert vec["zzz"] > 0.0

    def test_cosine_identity(self):
        vec = {"a": 1.0, "b": 2.0}
        assert cosine(vec, vec) == pytest.approx(1.0, abs=1e-12)

    def test_cosine_disjoint(self):
        assert cosine({"a": 1.0}, {"b": 1.0}) == 0.0

    def test_cosine_worked_example(self):
        got = cosine({"a": 1.0, "b": 1.0}, {"a": 1.0})
        assert got == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert got == pytest.approx(0.7071, abs=1e-4)

    def test_cosine_zero_norm(self):
        assert cosine({}, {"a": 1.0}) == 0.0
        assert cosine({"a": 0.0}, {"a": 1.0}) == 0.0

    def test_cosine_symmetric_and_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            u = {f"t{i}": float(rng.uniform(0, 5)) for i in rng.integers(0, 8, 5)}
            v = {f"t{i}": float(rng.uniform(0, 5)) for i in rng.integers(0, 8, 5)}
            assert cosine(u, v) == cosine(v, u)
            assert -1e-12 <= cosine(u, v) <= 1.0 + 1e-12

    def test_scaling_by_powers_of_two_is_exact(self):
        rng = np.random.default_rng(4)
        for scale_factor in (0.5, 2.0, 8.0):
            for _ in range(25):
                u = {f"t{i}": float(rng.uniform(0.1, 5)) for i in range(4)}
                v = {f"t{i}": float(rng.uniform(0.1, 5)) for i in range(2, 7)}
                su = {t: scale_factor * w for t, w in u.items()}
                sv = {t: scale_factor * w for t, w in v.items()}
                assert cosine(su, sv) == cosine(u, v)

    def test_matches_reference_on_20_doc_corpus(self):
        rng = np.random.default_rng(23)
        docs = random_corpus(rng, 20, vocab_size=12, max_len=9)
        docs = [(i, tokens if tokens else ["pad"]) for i, tokens in docs]
        index = make_index(docs)
        ids = [i for i, _ in docs]
        tokens = [t for _, t in docs]
        doc_vecs = {i: tfidf_vector(index, t) for i, t in docs}
        for _ in range(60):
            query = [f"w{int(t)}" for t in rng.integers(0, 14, int(rng.integers(1, 5)))]
            doc_id = int(rng.integers(0, 20))
            got = cosine(tfidf_vector(index, query), doc_vecs[doc_id])
            assert got == pytest.approx(
                ref_tfidf_cosine(tokens, ids, query, doc_id), abs=1e-10
            )


class TestLm:
    def test_worked_example(self):
        # D = [a, b], corpus {[a, b], [b]}: ln(0.9 * 0.5 + 0.1 * 1/3)
        index = make_index([(1, ["a", "b"]), (2, ["b"])])
        expected = math.log(0.9 * 0.5 + 0.1 * (1.0 / 3.0))
        got = lm_score(index, LmParams(alpha=0.1), ["a"], 1)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(-0.7270, abs=1e-4)

    def test_alpha_one_ignores_document(self):
        index = make_index(TWO_DOCS)
        params = LmParams(alpha=1.0)
        scores = {d: lm_score(index, params, ["a", "b"], d) for d in (1, 2)}
        assert scores[1] == scores[2]

    def test_alpha_one_rank_order_is_doc_id_order(self):
        index = make_index(TWO_DOCS)
        ranked = rank(index, "lm", ["a", "b"], 5, lm=LmParams(alpha=1.0))
        assert [doc for doc, _ in ranked] == [1, 2]

    def test_unknown_everywhere_gives_minus_inf(self):
        index = make_index(TWO_DOCS)
        assert lm_score(index, LmParams(alpha=0.1), ["zzz"], 1) == float("-inf")

    def test_token_multiplicity_counts(self):
        index = make_index(TWO_DOCS)
        params = LmParams()
        single = lm_score(index, params, ["a"], 1)
        double = lm_score(index, params, ["a", "a"], 1)
        assert double == 2 * single

    def test_unknown_doc_id(self):
        index = make_index(TWO_DOCS)
        with pytest.raises(KeyError):
            lm_score(index, LmParams(), ["a"], 42)

    def test_empty_corpus_rejected(self):
        index = make_index([(1, [])])
        with pytest.raises(ValueError):
            lm_score(index, LmParams(), ["a"], 1)

    def test_matches_reference_on_20_doc_corpus(self):
        rng = np.random.default_rng(29)
        docs = random_corpus(rng, 20, vocab_size=10, max_len=8)
        docs = [(i, tokens if tokens else ["pad"]) for i, tokens in docs]
        index = make_index(docs)
        ids = [i for i, _ in docs]
        tokens = [t for _, t in docs]
        for _ in range(60):
            query = [f"w{int(t)}" for t in rng.integers(0, 12, int(rng.integers(1, 5)))]
            doc_id = int(rng.integers(0, 20))
            got = lm_score(index, LmParams(alpha=0.1), query, doc_id)
            want = ref_lm(tokens, ids, query, doc_id, alpha=0.1)
            if math.isinf(want):
                assert got == want
            else:
                assert got == pytest.approx(want, abs=1e-10)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            LmParams(alpha=-0.1)
        with pytest.raises(ValueError):
            LmParams(alpha=1.1)


class TestRank:
    def test_k_at_least_corpus_returns_all_sorted(self):
        index = make_index(TWO_DOCS)
        ranked = rank(index, "bm25", ["b"], 10)
        assert len(ranked) == 2
        scores = [s for _, s in ranked]
        assert scores == sorted(scores, reverse=True)

    def test_tie_break_by_ascending_doc_id(self):
        index = make_index([(7, ["a", "b"]), (3, ["a", "b"]), (5, ["a", "b"])])
        ranked = rank(index, "bm25", ["a"], 3)
        assert [doc for doc, _ in ranked] == [3, 5, 7]

    def test_k_validated(self):
        index = make_index(TWO_DOCS)
        with pytest.raises(ValueError):
            rank(index, "bm25", ["a"], 0)

    def test_unknown_method(self):
        index = make_index(TWO_DOCS)
        with pytest.raises(ValueError, match="method"):
            rank(index, "pagerank", ["a"], 1)

    @pytest.mark.parametrize("method", ["bm25", "tfidf-cos", "lm"])
    def test_equals_brute_force_sort(self, method):
        rng = np.random.default_rng(31)
        docs = random_corpus(rng, 40, vocab_size=12, max_len=9)
        docs = [(i, tokens if tokens else ["pad"]) for i, tokens in docs]
        index = make_index(docs)
        scorers = {
            "bm25": lambda q, d: bm25_score(index, Bm25Params(), q, d),
            "tfidf-cos": lambda q, d: cosine(
                tfidf_vector(index, q), tfidf_vector(index, docs[d][1])
            ),
            "lm": lambda q, d: lm_score(index, LmParams(), q, d),
        }
        for _ in range(20):
            query = [f"w{int(t)}" for t in rng.integers(0, 14, 3)]
            expected = sorted(
                ((d, scorers[method](query, d)) for d, _ in docs),
                key=lambda pair: (-pair[1], pair[0]),
            )
            for k in (1, 5, 40, 100):
                assert rank(index, method, query, k) == expected[: k]


class TestIndexPersistence:
    def _random_index(self, seed=41, n_docs=25):
        rng = np.random.default_rng(seed)
        docs = random_corpus(rng, n_docs, vocab_size=20, max_len=10)
        # Non-contiguous ids and one guaranteed-empty doc exercise the format.
        docs = [(3 * i + 10, tokens) for i, tokens in enumerate(t for _, t in docs)]
        docs[0] = (docs[0][0], [])
        return make_index(docs)

    def test_round_trip_fields(self, tmp_path):
        index = self._random_index()
        path = tmp_path / "corpus.spqi"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.postings == index.postings
        assert loaded.doc_len == index.doc_len
        assert loaded.df == index.df
        assert loaded.collection_tf == index.collection_tf
        assert loaded.n_docs == index.n_docs
        assert loaded.avg_len == index.avg_len
        assert loaded.total_tokens == index.total_tokens

    def test_save_load_save_is_byte_stable(self, tmp_path):
        index = self._random_index()
        first = tmp_path / "a.spqi"
        second = tmp_path / "b.spqi"
        save_index(index, first)
        save_index(load_index(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_scores_identical_after_reload(self, tmp_path):
        index = self._random_index()
        path = tmp_path / "c.spqi"
        save_index(index, path)
        loaded = load_index(path)
        query = ["w1", "w5", "w19"]
        for doc_id in index.doc_len:
            assert bm25_score(index, Bm25Params(), query, doc_id) == bm25_score(
                loaded, Bm25Params(), query, doc_id
            )
            assert lm_score(index, LmParams(), query, doc_id) == lm_score(
                loaded, LmParams(), query, doc_id
            )

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.spqi"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError, match="magic"):
            load_index(path)

    def test_truncated_rejected(self, tmp_path):
        index = self._random_index()
        path = tmp_path / "t.spqi"
        save_index(index, path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(FormatError):
            load_index(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError, match="not found"):
            load_index(tmp_path / "absent.spqi")

    def test_u64_scale_doc_ids_round_trip(self, tmp_path):
        index = make_index([
            (2**40 + 7, ["alpha", "beta"]),
            (2**63 - 1, []),
            (0, ["beta"]),
        ])
        path = tmp_path / "big.spqi"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.doc_len == index.doc_len
        assert loaded.postings == index.postings
