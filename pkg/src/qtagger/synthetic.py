"""Synthetic imbalanced corpora for experiments and tests.

Generates sentences over a small vocabulary with two frequent labels
(outside filler and a common single-token chunk type) and four rare chunk
types.  Rare surface forms are ambiguous on their own: flanked by their cue
word (``cue r cue``) they are a rare chunk, alone they are plain filler,
and the marked variant is the less common one.  A unigram tagger therefore
converges to low-confidence O on them: its errors concentrate on the rare
(minority) labels, and the tokens fall below any high confidence
threshold.  A context-window model sees the cues and can recover the rare
chunks, which is exactly the regime the relabeler is meant to clean up.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, Sentence, TagInventory, Token

RARE_TYPES = ("RARE1", "RARE2", "RARE3", "RARE4")


def _pools(filler_words: int = 30, item_words: int = 15, rare_words: int = 3):
    filler = [f"f{i:02d}" for i in range(filler_words)]
    items = [f"item{i:02d}" for i in range(item_words)]
    rare = {t: [f"{t.lower()}w{j}" for j in range(rare_words)] for t in RARE_TYPES}
    cues = {t: f"cue{k}" for k, t in enumerate(RARE_TYPES)}
    return filler, items, rare, cues


def _generate_sentences(num_tokens: int, rng: np.random.Generator, item_rate: float,
                        marked_rate: float, unmarked_rate: float) -> list[list[tuple[str, str]]]:
    filler, items, rare, cues = _pools()
    sentences = []
    produced = 0
    while produced < num_tokens:
        length = int(rng.integers(6, 13))
        sent: list[tuple[str, str]] = []
        while len(sent) < length:
            u = rng.random()
            if u < item_rate:
                sent.append((items[int(rng.integers(len(items)))], "B-ITEM"))
            elif u < item_rate + marked_rate:
                # cue-flanked rare form -> a true rare chunk
                rtype = RARE_TYPES[int(rng.integers(len(RARE_TYPES)))]
                words = rare[rtype]
                word = words[int(rng.integers(len(words)))]
                sent.append((cues[rtype], "O"))
                sent.append((word, f"B-{rtype}"))
                sent.append((cues[rtype], "O"))
            elif u < item_rate + marked_rate + unmarked_rate:
                # the same rare form without cues is plain filler
                rtype = RARE_TYPES[int(rng.integers(len(RARE_TYPES)))]
                words = rare[rtype]
                sent.append((words[int(rng.integers(len(words)))], "O"))
            else:
                sent.append((filler[int(rng.integers(len(filler)))], "O"))
        sentences.append(sent)
        produced += len(sent)
    return sentences


def imbalanced_corpus(train_tokens: int = 5000, test_tokens: int = 1200,
                      seed: int = 0, minority_threshold: float = 0.02,
                      item_rate: float = 0.20, marked_rate: float = 0.053,
                      unmarked_rate: float = 0.065) -> tuple[Corpus, Corpus]:
    """Matched train/test corpora drawn from the same word distribution.

    With the default rates each rare type gets ~1.2% of the tokens, so
    ``minority_threshold`` defaults to 0.02 to classify the four rare types
    as minority and O/B-ITEM (~95% of tokens together) as majority.  Marked
    rare forms are deliberately rarer than unmarked ones (~45/55), so a
    converged unigram tagger predicts O for them and misses the rare chunks.
    """
    rng = np.random.default_rng(seed)
    raw_train = _generate_sentences(train_tokens, rng, item_rate, marked_rate, unmarked_rate)
    raw_test = _generate_sentences(test_tokens, rng, item_rate, marked_rate, unmarked_rate)

    order: list[str] = []
    counts: dict[str, int] = {}
    for sent in raw_train:
        for _, label in sent:
            if label not in counts:
                order.append(label)
                counts[label] = 0
            counts[label] += 1
    # a tiny draw can miss a rare type entirely; keep the inventory complete
    for rtype in RARE_TYPES:
        label = f"B-{rtype}"
        if label not in counts:
            order.append(label)
            counts[label] = 0
    inventory = TagInventory(order, [counts[l] for l in order], minority_threshold)

    def build(raw, split):
        sents = [Sentence(tuple(Token(w, inventory.index(l)) for w, l in sent))
                 for sent in raw]
        return Corpus(sents, inventory, split)

    return build(raw_train, "train"), build(raw_test, "test")
