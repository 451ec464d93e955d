"""Two-stage question-answering retrieval at desk scale.

Stage 1 condenses each answer passage to the sentences most relevant to
its paired question (BM25 over the passage's own sentences); stage 2
ranks passages by cosine similarity of mean-pooled token embeddings
trained with the multiple-negatives ranking loss. Sparse baselines
(BM25, TF-IDF cosine, unigram query likelihood) share the same
preprocessing and index, and an evaluation harness reports P@K, mAP and
the lexical-overlap bucket analysis.
"""

from .condenser import CondensedPassage, condense, condense_corpus
from .corpus import (
    QAPair,
    StopwordSet,
    TokenizedText,
    Vocabulary,
    extract_stopwords,
    load_jsonl,
    normalize,
    split_sentences,
    tokenize,
)
from .encoder import (
    EncoderModel,
    MnrBatch,
    TrainConfig,
    encode,
    load_model,
    mnr_gradients,
    mnr_loss,
    new_model,
    save_model,
    sim_matrix,
    train,
)
from .errors import DataError, FormatError, QASearchError, VocabularyMismatchError
from .evalkit import (
    EvalResult,
    OverlapBucketReport,
    evaluate,
    lexical_overlap,
    mean_average_precision,
    overlap_bucket_eval,
    precision_at_k,
)
from .pipeline import (
    EmbeddingStore,
    Pipeline,
    PipelineConfig,
    import_external_embeddings,
    load_store,
    rank_store,
    save_store,
)
from .sparse import (
    Bm25Params,
    InvertedIndex,
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

__version__ = "0.1.0"
