#!/usr/bin/env python3
"""Evaluation harness: P@K, mAP and the lexical-overlap bucket report.

Builds a mixed corpus (high-overlap and zero-overlap pairs), trains the
encoder, and shows how the bucket analysis exposes where bag-of-words
scoring collapses while the dense model keeps working.
"""

from qasearch import (
    Pipeline,
    PipelineConfig,
    TrainConfig,
    Vocabulary,
    evaluate,
    normalize,
    overlap_bucket_eval,
    tokenize,
    train,
)
from qasearch.evalkit import bucket_report_csv, eval_report_text
from qasearch.synth import separable_corpus, zero_overlap_corpus

# ids must stay unique when mixing the two corpora
easy = separable_corpus(25)
hard = [
    pair.__class__(id=pair.id + 1000, question=pair.question,
                   answer=pair.answer)
    for pair in zero_overlap_corpus(25)
]
pairs = easy + hard

token_pairs = [
    (
        tokenize(normalize(p.question)).tokens,
        tokenize(normalize(p.answer)).tokens,
    )
    for p in pairs
]
vocab = Vocabulary.from_token_lists(
    [side for q, a in token_pairs for side in (q, a)]
)
id_pairs = [(vocab.ids(q), vocab.ids(a)) for q, a in token_pairs]
model, _ = train(
    id_pairs, vocab.size,
    TrainConfig(epochs=30, batch_size=32, dim=16, seed=7, shuffle_seed=8),
    vocab=vocab,
)
pipeline = Pipeline.build(pairs, model, PipelineConfig(method="two-stage"))

print("aggregate scores on the mixed corpus\n")
for method in ("bm25", "two-stage"):
    result = evaluate(pipeline, pairs, method=method, k_values=[1, 10],
                      map_depth=50, split="demo")
    print(eval_report_text(result))

print("P@1 by lexical-overlap bucket (X = shared token types with gold)\n")
for method in ("bm25", "two-stage"):
    report = overlap_bucket_eval(pipeline, pairs, method=method, split="demo")
    print(f"--- {method} ---")
    print(bucket_report_csv(report))
