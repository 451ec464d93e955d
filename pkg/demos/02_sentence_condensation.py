#!/usr/bin/env python3
"""Stage 1 walkthrough: condensing a long passage to its best sentences.

A long answer passage blows past the encoder's token budget. The
condenser scores each sentence against the paired question with BM25
over the passage's own sentences, keeps the top K, and re-emits them in
original order.
"""

from qasearch import condense, normalize, split_sentences, tokenize

question = "Can I take antibiotics while pregnant?"

passage = (
    "Many medications require extra care during pregnancy. "
    "Penicillin-class antibiotics are generally considered safe when "
    "prescribed by your doctor. "
    "Always tell the prescribing doctor that you are pregnant. "
    "Our clinic opens at eight in the morning on weekdays. "
    "Parking is available behind the main building. "
    "Tetracycline antibiotics should be avoided during pregnancy because "
    "they affect fetal bone growth. "
    "Drink plenty of water with any antibiotic course. "
    "The cafeteria serves lunch until two in the afternoon."
)

sentences = split_sentences(normalize(passage))
print(f"passage has {len(sentences)} sentences, "
      f"{len(normalize(passage).split())} tokens\n")

guide = tokenize(normalize(question))
print(f"guide question tokens: {guide.tokens}\n")

for k in (3, 5):
    condensed = condense(passage, guide, k)
    kept = len(condensed.kept_sentences)
    total = sum(len(s.split()) for s in condensed.kept_sentences)
    print(f"K = {k}: kept {kept} sentences, {total} tokens")
    for sentence in condensed.kept_sentences:
        print(f"    {sentence}")
    print()

# with no usable overlap the condenser falls back to the first K
# sentences rather than guessing
off_topic = tokenize(normalize("how do I renew my gym membership"))
fallback = condense(passage, off_topic, 2)
print("off-topic guide falls back to the first sentences:")
for sentence in fallback.kept_sentences:
    print(f"    {sentence}")
