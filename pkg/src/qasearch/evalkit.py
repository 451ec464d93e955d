"""Retrieval evaluation: P@K, mAP, and lexical-overlap bucket analysis.

Every question has exactly one gold passage, so average precision
reduces to the reciprocal rank of the gold document and mAP equals mean
reciprocal rank; the implementation uses that form directly. The
overlap analysis groups questions by how many distinct tokens they
share with their gold passage (X = 0..10) and reports P@1 per bucket,
which makes the lexical-gap failure mode of bag-of-words scorers
directly visible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import QAPair, TokenizedText, normalize, tokenize
from .pipeline import Pipeline
from .sparse import RankedList

__all__ = [
    "EvalResult",
    "OverlapBucketReport",
    "precision_at_k",
    "mean_average_precision",
    "lexical_overlap",
    "evaluate",
    "overlap_bucket_eval",
    "eval_report_json",
    "eval_report_text",
    "bucket_report_json",
    "bucket_report_csv",
]


@dataclass
class EvalResult:
    """Aggregate scores (percentages) plus the per-question gold ranks."""

    p_at_k: dict[int, float]
    map_score: float
    per_question: list[tuple[int, int | None]]
    method: str = ""
    split: str = ""


@dataclass
class OverlapBucketReport:
    """X -> (question count, P@1 percentage or None for empty buckets)."""

    buckets: dict[int, tuple[int, float | None]]
    method: str = ""
    split: str = ""


def _check_coverage(
    rankings: Mapping[int, RankedList], gold: Mapping[int, int]
) -> list[int]:
    qids = set(rankings) | set(gold)
    if not qids:
        raise ValueError("nothing to evaluate: no questions given")
    for qid in qids:
        if qid not in gold:
            raise ValueError(f"question {qid} has no gold document")
        if qid not in rankings:
            raise ValueError(f"question {qid} has no ranking")
    return sorted(qids)


def gold_rank(ranking: RankedList, gold_doc: int) -> int | None:
    """1-based rank of the gold document, or None when absent."""
    for pos, (doc_id, _) in enumerate(ranking, start=1):
        if doc_id == gold_doc:
            return pos
    return None


def precision_at_k(
    rankings: Mapping[int, RankedList], gold: Mapping[int, int], k: int
) -> float:
    """Percentage of questions whose gold document is in the top k."""
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    qids = _check_coverage(rankings, gold)
    hits = sum(
        1
        for qid in qids
        if any(doc_id == gold[qid] for doc_id, _ in rankings[qid][:k])
    )
    return 100.0 * hits / len(qids)


def mean_average_precision(
    rankings: Mapping[int, RankedList],
    gold: Mapping[int, int],
    depth: int = 100,
) -> float:
    """Mean reciprocal rank of the gold document, as a percentage.

    With a single relevant document per question this *is* mean average
    precision. Gold documents absent from the top `depth` entries
    contribute 0.
    """
    qids = _check_coverage(rankings, gold)
    total = 0.0
    for qid in qids:
        rank_pos = gold_rank(rankings[qid][:depth], gold[qid])
        if rank_pos is not None:
            total += 1.0 / rank_pos
    return 100.0 * total / len(qids)


def _tokens(text: TokenizedText | Sequence[str]) -> Sequence[str]:
    return text.tokens if isinstance(text, TokenizedText) else text


def lexical_overlap(
    question: TokenizedText | Sequence[str],
    passage: TokenizedText | Sequence[str],
) -> int:
    """Distinct token types shared by question and passage."""
    return len(set(_tokens(question)) & set(_tokens(passage)))


def evaluate(
    pipeline: Pipeline,
    pairs: Sequence[QAPair],
    method: str | None = None,
    k_values: Iterable[int] = (1, 5, 10),
    map_depth: int = 100,
    split: str = "",
) -> EvalResult:
    """Retrieve every question and score the rankings."""
    k_values = sorted(set(k_values))
    if not k_values:
        raise ValueError("need at least one K for P@K")
    method = method or pipeline.config.method
    depth = max(max(k_values), map_depth)
    rankings = {
        pair.id: pipeline.retrieve(pair.question, method=method, top_k=depth)
        for pair in pairs
    }
    gold = {pair.id: pair.id for pair in pairs}
    per_question = [
        (pair.id, gold_rank(rankings[pair.id], pair.id)) for pair in pairs
    ]
    return EvalResult(
        p_at_k={k: precision_at_k(rankings, gold, k) for k in k_values},
        map_score=mean_average_precision(rankings, gold, depth=map_depth),
        per_question=per_question,
        method=method,
        split=split,
    )


def overlap_bucket_eval(
    pipeline: Pipeline,
    pairs: Sequence[QAPair],
    method: str | None = None,
    max_overlap: int = 10,
    split: str = "",
) -> OverlapBucketReport:
    """P@1 per lexical-overlap bucket X in 0..max_overlap.

    X is computed against the question's own gold passage with the
    pipeline's preprocessing; questions with X beyond the range are
    left out. Empty buckets report count 0 and P@1 None.
    """
    method = method or pipeline.config.method
    grouped: dict[int, list[QAPair]] = {x: [] for x in range(max_overlap + 1)}
    for pair in pairs:
        overlap = lexical_overlap(
            tokenize(normalize(pair.question), pipeline.stopwords,
                     splitter=pipeline.splitter),
            tokenize(normalize(pair.answer), pipeline.stopwords,
                     splitter=pipeline.splitter),
        )
        if overlap <= max_overlap:
            grouped[overlap].append(pair)
    buckets: dict[int, tuple[int, float | None]] = {}
    for x, bucket_pairs in grouped.items():
        if not bucket_pairs:
            buckets[x] = (0, None)
            continue
        rankings = {
            pair.id: pipeline.retrieve(pair.question, method=method, top_k=1)
            for pair in bucket_pairs
        }
        gold = {pair.id: pair.id for pair in bucket_pairs}
        buckets[x] = (len(bucket_pairs), precision_at_k(rankings, gold, 1))
    return OverlapBucketReport(buckets=buckets, method=method, split=split)


def eval_report_json(result: EvalResult) -> str:
    """Machine-readable report; key order and layout are deterministic."""
    payload = {
        "method": result.method,
        "split": result.split,
        "p_at_k": {str(k): v for k, v in sorted(result.p_at_k.items())},
        "map": result.map_score,
        "per_question": [
            {"id": qid, "gold_rank": rank_pos}
            for qid, rank_pos in result.per_question
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def eval_report_text(result: EvalResult) -> str:
    """Aligned-column summary in the style of a results table."""
    headers = ["Method"] + [f"P@{k}" for k in sorted(result.p_at_k)] + ["mAP"]
    values = [result.method or "-"]
    values += [f"{result.p_at_k[k]:.2f}" for k in sorted(result.p_at_k)]
    values += [f"{result.map_score:.2f}"]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    header_line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    value_line = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return f"{header_line}\n{value_line}\n"


def bucket_report_json(report: OverlapBucketReport) -> str:
    payload = {
        "method": report.method,
        "split": report.split,
        "buckets": {
            str(x): {"count": count, "p_at_1": p1}
            for x, (count, p1) in sorted(report.buckets.items())
        },
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def bucket_report_csv(report: OverlapBucketReport) -> str:
    """CSV rows X,count,p_at_1; empty P@1 for empty buckets."""
    lines = ["X,count,p_at_1"]
    for x, (count, p1) in sorted(report.buckets.items()):
        cell = "" if p1 is None else f"{p1:.2f}"
        lines.append(f"{x},{count},{cell}")
    return "\n".join(lines) + "\n"
