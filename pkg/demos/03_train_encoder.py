#!/usr/bin/env python3
"""Training the bi-encoder with multiple-negatives ranking loss.

Each batch of K (question, passage) pairs yields a K x K scaled-cosine
similarity matrix; the loss pushes every diagonal entry above its row.
This demo trains on the bundled separable corpus, prints the loss
curve, and verifies one analytic gradient against finite differences.
"""

import numpy as np

from qasearch import (
    MnrBatch,
    TrainConfig,
    Vocabulary,
    mnr_gradients,
    mnr_loss,
    new_model,
    normalize,
    sim_matrix,
    tokenize,
    train,
)
from qasearch.synth import separable_corpus

pairs = separable_corpus(50)
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
print(f"{len(pairs)} pairs, vocabulary of {vocab.size} tokens")

config = TrainConfig(epochs=30, batch_size=32, learning_rate=0.05,
                     dim=16, scale=20.0, seed=7, shuffle_seed=8)
model, history = train(id_pairs, vocab.size, config, vocab=vocab)

print("\nper-epoch mean loss")
for epoch, loss in enumerate(history, start=1):
    bar = "#" * int(40 * loss / max(history))
    print(f"  {epoch:>2}  {loss:8.4f}  {bar}")

# a trained model separates matched from mismatched pairs
batch = MnrBatch(questions=[id_pairs[0][0], id_pairs[1][0]],
                 passages=[id_pairs[0][1], id_pairs[1][1]])
sim = sim_matrix(model, batch)
print(f"\nsimilarity matrix after training (scale {model.scale}):")
print(np.array_str(sim, precision=2))
print(f"loss on this batch: {mnr_loss(sim):.6f}")

# gradient check: analytic vs central finite differences at one coordinate
probe = new_model(vocab.size, dim=16, scale=20.0, seed=3)
grad = mnr_gradients(probe, batch)
row, col = id_pairs[0][0][0], 5
step = 1e-5
original = probe.embeddings[row, col]
probe.embeddings[row, col] = original + step
up = mnr_loss(sim_matrix(probe, batch))
probe.embeddings[row, col] = original - step
down = mnr_loss(sim_matrix(probe, batch))
probe.embeddings[row, col] = original
numeric = (up - down) / (2 * step)
print(f"\ngradient check at embedding[{row}, {col}]:")
print(f"  analytic          {grad[row, col]: .10f}")
print(f"  finite difference {numeric: .10f}")
