"""Command-line front door: index, train, query, eval, analyze-overlap.

Batch operation only; every command reads one TOML config (see README)
and is deterministic given the config plus seed. Exit codes: 0 success,
1 usage or configuration error, 2 data error (missing or malformed
files, empty query), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .condenser import condense_corpus, load_condensed, save_condensed
from .config import SPLITS, AppConfig, ConfigError, load_config
from .corpus import (
    Vocabulary,
    extract_stopwords,
    load_jsonl,
    load_stopwords,
    normalize,
    save_stopwords,
    split_sentences,
    tokenize,
)
from .encoder import encode, load_model, save_model, train
from .errors import DataError, QASearchError
from .evalkit import (
    bucket_report_csv,
    bucket_report_json,
    eval_report_json,
    eval_report_text,
    evaluate,
    overlap_bucket_eval,
)
from .pipeline import (
    RETRIEVAL_METHODS,
    EmbeddingStore,
    Pipeline,
    load_store,
    save_store,
)
from .sparse import build_index, load_index, save_index

LENGTH_BUCKETS = ((0, 100), (101, 300), (301, 500), (501, 700), (701, 1000))


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="qasearch",
        description="Two-stage QA retrieval: sparse baselines plus a "
        "trainable bi-encoder.",
    )
    parser.add_argument("--config", default="qasearch.toml",
                        help="path to the TOML config (default: %(default)s)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--method", choices=RETRIEVAL_METHODS, default=None,
                        help="override the retrieval method")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("index", help="build stop-words, sparse index and "
                                 "condensed corpus from the train split")
    sub.add_parser("train", help="train the dense encoder; write model, "
                                 "loss history and embedding store")
    query = sub.add_parser("query", help="retrieve passages for one question")
    query.add_argument("question", help="question text")
    query.add_argument("--top-k", type=int, default=None,
                       help="number of results (default: config top_k)")
    for name in ("eval", "analyze-overlap"):
        cmd = sub.add_parser(
            name,
            help="score a split" if name == "eval"
            else "P@1 by lexical-overlap bucket on a split",
        )
        cmd.add_argument("--split", choices=SPLITS, default=None,
                         help="dataset split (default: config eval.split)")
    return parser


def _ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def _print_corpus_stats(cfg: AppConfig, pairs, stopword_count: int) -> None:
    splitter = cfg.splitter()
    question_lens = [len(normalize(p.question).split()) for p in pairs]
    answer_lens = [len(normalize(p.answer).split()) for p in pairs]
    sentence_counts = [len(split_sentences(normalize(p.answer))) for p in pairs]
    vocabulary = set()
    for pair in pairs:
        vocabulary.update(tokenize(normalize(pair.question), splitter=splitter).tokens)
        vocabulary.update(tokenize(normalize(pair.answer), splitter=splitter).tokens)
    n = len(pairs)
    print(f"pairs                 {n}")
    print(f"avg question tokens   {sum(question_lens) / n:.2f}")
    print(f"avg answer tokens     {sum(answer_lens) / n:.2f}")
    print(f"avg answer sentences  {sum(sentence_counts) / n:.2f}")
    print(f"vocabulary            {len(vocabulary)}")
    print(f"stop-words removed    {stopword_count}")
    print("answer length distribution (%)")
    for low, high in LENGTH_BUCKETS:
        share = 100.0 * sum(1 for length in answer_lens if low <= length <= high) / n
        label = f"<= {high}" if low == 0 else f"{low}-{high}"
        print(f"  {label:<10} {share:.2f}")
    share = 100.0 * sum(1 for length in answer_lens if length > 1000) / n
    print(f"  {'> 1000':<10} {share:.2f}")


def cmd_index(cfg: AppConfig, args) -> int:
    pairs = load_jsonl(cfg.paths.train)
    splitter = cfg.splitter()
    raw_docs = [
        tokenize(normalize(p.answer), source_id=p.id, splitter=splitter)
        for p in pairs
    ]
    stopwords = extract_stopwords(raw_docs, cfg.stopword_m)
    _ensure_parent(cfg.paths.stopwords)
    save_stopwords(stopwords, cfg.paths.stopwords)

    docs = [
        tokenize(normalize(p.answer), stopwords, source_id=p.id, splitter=splitter)
        for p in pairs
    ]
    index = build_index(docs)
    _ensure_parent(cfg.paths.index)
    save_index(index, cfg.paths.index)

    condensed = condense_corpus(
        pairs, cfg.condenser_k, stopwords=stopwords, params=cfg.bm25,
        splitter=splitter,
    )
    _ensure_parent(cfg.paths.condensed)
    save_condensed(condensed, cfg.paths.condensed)

    _print_corpus_stats(cfg, pairs, len(stopwords.words))
    return 0


def _training_token_pairs(cfg: AppConfig, pairs):
    """Tokenize (question, passage) pairs for the encoder.

    Passages are the condensed text in two-stage mode, the full
    normalized answer otherwise; both sides honor the stop-word flag.
    """
    splitter = cfg.splitter()
    stopwords = load_stopwords(cfg.paths.stopwords)
    dense_words = stopwords.words if cfg.stopwords_for_dense else frozenset()
    if cfg.method == "two-stage":
        condensed = {c.doc_id: c.text for c in load_condensed(cfg.paths.condensed)}
        missing = [p.id for p in pairs if p.id not in condensed]
        if missing:
            raise DataError(
                f"condensed corpus lacks {len(missing)} train passages "
                f"(first missing id {missing[0]}); re-run `index`"
            )
        passage_text = {p.id: condensed[p.id] for p in pairs}
    else:
        passage_text = {p.id: normalize(p.answer) for p in pairs}
    token_pairs = []
    for pair in pairs:
        q_tokens = tokenize(normalize(pair.question), dense_words,
                            splitter=splitter).tokens
        p_tokens = tokenize(passage_text[pair.id], dense_words,
                            splitter=splitter).tokens
        if not q_tokens or not p_tokens:
            raise DataError(
                f"pair {pair.id} is empty after preprocessing; cannot train"
            )
        token_pairs.append((q_tokens, p_tokens))
    return token_pairs


def cmd_train(cfg: AppConfig, args) -> int:
    pairs = load_jsonl(cfg.paths.train)
    token_pairs = _training_token_pairs(cfg, pairs)
    vocab = Vocabulary.from_token_lists(
        [tokens for q, p in token_pairs for tokens in (q, p)]
    )
    id_pairs = [(vocab.ids(q), vocab.ids(p)) for q, p in token_pairs]
    model, history = train(id_pairs, vocab.size, cfg.train_config(), vocab=vocab)

    _ensure_parent(cfg.paths.model)
    save_model(model, cfg.paths.model)
    _ensure_parent(cfg.paths.loss_history)
    rows = "".join(
        f"{epoch},{loss!r}\n" for epoch, loss in enumerate(history, start=1)
    )
    cfg.paths.loss_history.write_text("epoch,mean_loss\n" + rows, encoding="utf-8")

    vectors = {
        pair.id: encode(model, ids[: cfg.max_tokens])
        for pair, (_, ids) in zip(pairs, id_pairs)
    }
    store = EmbeddingStore.from_dict(vectors)
    _ensure_parent(cfg.paths.store)
    save_store(store, cfg.paths.store)

    print(f"trained {cfg.epochs} epochs on {len(pairs)} pairs "
          f"(vocabulary {vocab.size}, dim {cfg.dim})")
    if history:
        print(f"mean loss: first epoch {history[0]:.6f}, "
              f"last epoch {history[-1]:.6f}")
    return 0


def _load_query_pipeline(cfg: AppConfig, method: str) -> Pipeline:
    stopwords = load_stopwords(cfg.paths.stopwords)
    pipeline_cfg = replace(cfg.pipeline_config(), method=method)
    if method in ("dense", "two-stage"):
        model = load_model(cfg.paths.model)
        store = load_store(cfg.paths.store)
        if store.dim != model.dim:
            raise DataError(
                f"embedding store dimension {store.dim} does not match "
                f"model dimension {model.dim}"
            )
        return Pipeline(pipeline_cfg, store=store, model=model,
                        stopwords=stopwords, splitter=cfg.splitter())
    index = load_index(cfg.paths.index)
    return Pipeline(pipeline_cfg, index=index, stopwords=stopwords,
                    splitter=cfg.splitter())


def cmd_query(cfg: AppConfig, args) -> int:
    top_k = cfg.top_k if args.top_k is None else args.top_k
    if top_k < 1:
        raise _UsageError("--top-k must be >= 1")
    pipeline = _load_query_pipeline(cfg, cfg.method)
    results = pipeline.retrieve(args.question, method=cfg.method, top_k=top_k)
    for rank_pos, (doc_id, score) in enumerate(results, start=1):
        record = {
            "rank": rank_pos,
            "doc_id": doc_id,
            "score": score if math.isfinite(score) else None,
        }
        print(json.dumps(record))
    return 0


def _build_split_pipeline(cfg: AppConfig, method: str, split: str):
    """Index the evaluation split in memory, reusing persisted artifacts.

    The persisted index covers the train corpus (for `query`); scoring a
    dev/test split means retrieving over that split's own answer
    collection, so it is rebuilt here with the train-derived stop-words
    and, for dense methods, the trained model.
    """
    pairs = load_jsonl(cfg.paths.for_split(split))
    stopwords = load_stopwords(cfg.paths.stopwords)
    model = None
    if method in ("dense", "two-stage"):
        model = load_model(cfg.paths.model)
    pipeline_cfg = replace(cfg.pipeline_config(), method=method)
    pipeline = Pipeline.build(pairs, model, pipeline_cfg, stopwords=stopwords,
                              splitter=cfg.splitter())
    return pipeline, pairs


def cmd_eval(cfg: AppConfig, args) -> int:
    split = args.split or cfg.split
    method = cfg.method
    pipeline, pairs = _build_split_pipeline(cfg, method, split)
    result = evaluate(
        pipeline, pairs, method=method,
        k_values=cfg.eval_k, map_depth=cfg.map_depth, split=split,
    )
    reports = cfg.paths.reports_dir
    reports.mkdir(parents=True, exist_ok=True)
    (reports / f"eval_{method}_{split}.json").write_text(
        eval_report_json(result), encoding="utf-8"
    )
    text = eval_report_text(result)
    (reports / f"eval_{method}_{split}.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_analyze_overlap(cfg: AppConfig, args) -> int:
    split = args.split or cfg.split
    method = cfg.method
    pipeline, pairs = _build_split_pipeline(cfg, method, split)
    report = overlap_bucket_eval(pipeline, pairs, method=method, split=split)
    reports = cfg.paths.reports_dir
    reports.mkdir(parents=True, exist_ok=True)
    (reports / f"overlap_{method}_{split}.json").write_text(
        bucket_report_json(report), encoding="utf-8"
    )
    csv_text = bucket_report_csv(report)
    (reports / f"overlap_{method}_{split}.csv").write_text(
        csv_text, encoding="utf-8"
    )
    print(csv_text, end="")
    return 0


COMMANDS = {
    "index": cmd_index,
    "train": cmd_train,
    "query": cmd_query,
    "eval": cmd_eval,
    "analyze-overlap": cmd_analyze_overlap,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.method is not None:
            cfg.method = args.method
        return COMMANDS[args.command](cfg, args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except QASearchError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
