"""Trainable bi-encoder: mean-pooled token embeddings with MNR loss.

The model is a V x d embedding matrix; a text's vector is the arithmetic
mean of its token rows. Training minimizes the multiple-negatives
ranking loss over batches of K (question, positive passage) pairs, where
each question treats the other K - 1 passages in the batch as negatives:

    loss = -(1/K) * sum_i [ S[i][i] - log sum_j exp(S[i][j]) ]

with S[i][j] the scaled cosine similarity between question i and passage
j. Gradients are analytic (softmax -> scaled cosine -> mean pooling) and
checked against central finite differences in the test suite.

Parameters are float64 in memory but snapped to the float32 grid after
initialization and after training, so the persisted model (which stores
float32) reproduces in-memory scores bit for bit after a reload.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import binio
from .corpus import Vocabulary
from .errors import FormatError

__all__ = [
    "EncoderModel",
    "MnrBatch",
    "TrainConfig",
    "new_model",
    "encode",
    "sim_matrix",
    "mnr_loss",
    "mnr_gradients",
    "train",
    "save_model",
    "load_model",
]

MODEL_MAGIC = b"SPQE"

TokenIds = Sequence[int]


@dataclass
class EncoderModel:
    """Embedding matrix plus the similarity scale (inverse temperature).

    Raw cosines live in [-1, 1], which makes the in-batch softmax nearly
    uniform; the scale multiplier (default 20) sharpens it. scale = 1
    recovers the literal unscaled-cosine loss.
    """

    embeddings: np.ndarray  # V x d, float64
    scale: float = 20.0
    rng_seed: int = 0
    vocab: Vocabulary | None = None

    @property
    def vocab_size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]


@dataclass
class MnrBatch:
    """K question/positive-passage token-id pairs."""

    questions: list[list[int]]
    passages: list[list[int]]

    def __post_init__(self):
        if len(self.questions) != len(self.passages):
            raise ValueError("question and passage lists differ in length")
        if not self.questions:
            raise ValueError("batch must hold at least one pair")
        for side in (self.questions, self.passages):
            if any(not ids for ids in side):
                raise ValueError("batch sides must be non-empty token-id lists")

    @property
    def size(self) -> int:
        return len(self.questions)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the SGD training loop."""

    epochs: int = 15
    batch_size: int = 32
    learning_rate: float = 0.05
    max_tokens: int = 256
    dim: int = 64
    scale: float = 20.0
    seed: int = 0
    shuffle_seed: int = 1

    def __post_init__(self):
        # epochs = 0 and learning_rate = 0 are valid no-op configurations
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        for name in ("batch_size", "max_tokens", "dim", "scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _snap_to_f32(matrix: np.ndarray) -> np.ndarray:
    # Keeps float64 math exact across a float32 save/load round trip.
    return matrix.astype(np.float32).astype(np.float64)


def new_model(
    vocab_size: int,
    dim: int = 64,
    scale: float = 20.0,
    seed: int = 0,
    vocab: Vocabulary | None = None,
) -> EncoderModel:
    """Fresh model with embeddings uniform in [-0.5/d, 0.5/d]."""
    if vocab_size < 1 or dim < 1:
        raise ValueError("vocab_size and dim must be >= 1")
    rng = np.random.default_rng(seed)
    half = 0.5 / dim
    embeddings = _snap_to_f32(rng.uniform(-half, half, size=(vocab_size, dim)))
    return EncoderModel(embeddings=embeddings, scale=scale, rng_seed=seed,
                        vocab=vocab)


def _check_ids(model: EncoderModel, token_ids: np.ndarray) -> None:
    if token_ids.size == 0:
        raise ValueError("cannot encode an empty token list")
    if token_ids.min() < 0 or token_ids.max() >= model.vocab_size:
        raise ValueError("token id out of vocabulary range")


def encode(model: EncoderModel, token_ids: TokenIds) -> np.ndarray:
    """Mean of the embedding rows of the given tokens (order-invariant)."""
    ids = np.asarray(token_ids, dtype=np.intp)
    _check_ids(model, ids)
    return model.embeddings[ids].mean(axis=0)


def _pool(model: EncoderModel, side: list[list[int]]) -> np.ndarray:
    rows = np.empty((len(side), model.dim))
    for i, ids_list in enumerate(side):
        ids = np.asarray(ids_list, dtype=np.intp)
        _check_ids(model, ids)
        rows[i] = model.embeddings[ids].mean(axis=0)
    return rows


def _cosine_matrix(u: np.ndarray, v: np.ndarray):
    """Pairwise cosines plus the pieces the backward pass reuses."""
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    # Zero-norm vectors get cosine 0 everywhere (and zero gradient).
    safe_nu = np.where(nu == 0.0, 1.0, nu)
    safe_nv = np.where(nv == 0.0, 1.0, nv)
    u_hat = u / safe_nu[:, None]
    v_hat = v / safe_nv[:, None]
    u_hat[nu == 0.0] = 0.0
    v_hat[nv == 0.0] = 0.0
    cos = u_hat @ v_hat.T
    return cos, u_hat, v_hat, nu, nv, safe_nu, safe_nv


def sim_matrix(model: EncoderModel, batch: MnrBatch) -> np.ndarray:
    """K x K scaled cosine similarities: S[i][j] = scale * cos(q_i, p_j)."""
    u = _pool(model, batch.questions)
    v = _pool(model, batch.passages)
    cos, *_ = _cosine_matrix(u, v)
    return model.scale * cos


def mnr_loss(sim: np.ndarray) -> float:
    """Multiple-negatives ranking loss of a similarity matrix.

    Per-batch mean of logsumexp_j(S[i][:]) - S[i][i], computed with the
    max-shift trick; always >= 0 and exactly 0 for K = 1.
    """
    sim = np.asarray(sim, dtype=np.float64)
    if sim.ndim != 2 or sim.shape[0] != sim.shape[1]:
        raise ValueError(f"similarity matrix must be square, got {sim.shape}")
    shift = sim.max(axis=1, keepdims=True)
    lse = shift[:, 0] + np.log(np.exp(sim - shift).sum(axis=1))
    return float(np.mean(lse - np.diag(sim)))


def _loss_and_grad(model: EncoderModel, batch: MnrBatch) -> tuple[float, np.ndarray]:
    k = batch.size
    u = _pool(model, batch.questions)
    v = _pool(model, batch.passages)
    cos, u_hat, v_hat, nu, nv, safe_nu, safe_nv = _cosine_matrix(u, v)
    sim = model.scale * cos

    shift = sim.max(axis=1, keepdims=True)
    exp = np.exp(sim - shift)
    lse = shift[:, 0] + np.log(exp.sum(axis=1))
    loss = float(np.mean(lse - np.diag(sim)))

    # d loss / d S = (softmax - identity) / K, then through the cosine:
    # d cos(u, v) / d u = (v_hat - cos * u_hat) / ||u||.
    softmax = exp / exp.sum(axis=1, keepdims=True)
    g_sim = (softmax - np.eye(k)) / k
    g_cos = model.scale * g_sim
    row_proj = (g_cos * cos).sum(axis=1)
    col_proj = (g_cos * cos).sum(axis=0)
    g_u = (g_cos @ v_hat - row_proj[:, None] * u_hat) / safe_nu[:, None]
    g_v = (g_cos.T @ u_hat - col_proj[:, None] * v_hat) / safe_nv[:, None]
    g_u[nu == 0.0] = 0.0
    g_v[nv == 0.0] = 0.0

    grad = np.zeros_like(model.embeddings)
    for i, ids_list in enumerate(batch.questions):
        ids = np.asarray(ids_list, dtype=np.intp)
        np.add.at(grad, ids, g_u[i] / len(ids_list))
    for j, ids_list in enumerate(batch.passages):
        ids = np.asarray(ids_list, dtype=np.intp)
        np.add.at(grad, ids, g_v[j] / len(ids_list))
    return loss, grad


def mnr_gradients(model: EncoderModel, batch: MnrBatch) -> np.ndarray:
    """Analytic gradient of mnr_loss(sim_matrix(...)) w.r.t. the embeddings.

    Returns a full V x d array; rows of tokens not used by the batch are
    zero.
    """
    return _loss_and_grad(model, batch)[1]


def train(
    pairs: Sequence[tuple[TokenIds, TokenIds]],
    vocab_size: int,
    config: TrainConfig = TrainConfig(),
    vocab: Vocabulary | None = None,
) -> tuple[EncoderModel, list[float]]:
    """SGD over shuffled MNR batches; returns (model, per-epoch mean loss).

    Deterministic given the config seeds. Token lists are truncated to
    max_tokens per side; a trailing batch of size 1 is skipped because a
    single pair has no in-batch negatives (its loss is identically 0).
    """
    if not pairs:
        raise ValueError("training needs at least one pair")
    data = [
        (list(q)[: config.max_tokens], list(p)[: config.max_tokens])
        for q, p in pairs
    ]
    model = new_model(vocab_size, config.dim, config.scale, config.seed, vocab)
    shuffle_rng = np.random.default_rng(config.shuffle_seed)
    history: list[float] = []
    for _ in range(config.epochs):
        order = shuffle_rng.permutation(len(data))
        batch_losses = []
        for start in range(0, len(order), config.batch_size):
            chunk = order[start : start + config.batch_size]
            if len(chunk) < 2:
                continue
            batch = MnrBatch(
                questions=[data[i][0] for i in chunk],
                passages=[data[i][1] for i in chunk],
            )
            loss, grad = _loss_and_grad(model, batch)
            batch_losses.append(loss)
            model.embeddings -= config.learning_rate * grad
        history.append(
            float(np.mean(batch_losses)) if batch_losses else math.nan
        )
    model.embeddings = _snap_to_f32(model.embeddings)
    return model, history


def save_model(model: EncoderModel, path: str | Path) -> None:
    """Write the model in the SPQE binary format (see README for layout).

    The vocabulary is part of the file, so the model must carry one.
    """
    if model.vocab is None:
        raise ValueError("model has no vocabulary attached; cannot persist")
    if model.vocab.size != model.vocab_size:
        raise ValueError(
            f"vocabulary size {model.vocab.size} != embedding rows "
            f"{model.vocab_size}"
        )
    buf = bytearray()
    buf.extend(MODEL_MAGIC)
    binio.write_u32(buf, binio.FORMAT_VERSION)
    binio.write_u32(buf, model.vocab_size)
    binio.write_u32(buf, model.dim)
    binio.write_f64(buf, model.scale)
    buf.extend(model.embeddings.astype("<f4").tobytes(order="C"))
    for token in model.vocab.id_to_token:
        encoded = token.encode("utf-8")
        binio.write_varint(buf, len(encoded))
        buf.extend(encoded)
    Path(path).write_bytes(bytes(buf))


def load_model(path: str | Path) -> EncoderModel:
    """Read an SPQE file; embeddings come back as float64 (exact upcast)."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"model file not found: {path}")
    reader = binio.Reader(path.read_bytes(), name=str(path))
    reader.expect_magic(MODEL_MAGIC)
    reader.check_version(reader.read_u32())
    vocab_size = reader.read_u32()
    dim = reader.read_u32()
    scale = reader.read_f64()
    raw = reader.read_bytes(vocab_size * dim * 4)
    embeddings = (
        np.frombuffer(raw, dtype="<f4")
        .reshape(vocab_size, dim)
        .astype(np.float64)
    )
    tokens = []
    for _ in range(vocab_size):
        tokens.append(reader.read_bytes(reader.read_varint()).decode("utf-8"))
    reader.expect_eof()
    vocab = Vocabulary.from_id_order(tokens)
    return EncoderModel(embeddings=embeddings, scale=scale, vocab=vocab)
