"""Word-vector table and context-window averaged features.

The embedding table is trained together with the base tagger and then
frozen; the relabeler reuses the frozen vectors so both models see the same
word-level features.  Lookups are case-insensitive (the vocabulary is
lowercased); unknown words map to a dedicated unknown vector.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, Sentence

DEFAULT_DIM = 128


class EmbeddingTable:
    """Dense word vectors, one row per vocabulary word plus an unknown row."""

    def __init__(self, vocab: list[str], dim: int = DEFAULT_DIM, rng_seed: int = 0):
        if dim <= 0:
            raise ValueError(f"embedding dim must be positive, got {dim}")
        self.dim = dim
        self.rng_seed = rng_seed
        self.vocab = list(vocab)
        self._index = {w: i for i, w in enumerate(self.vocab)}
        if len(self._index) != len(self.vocab):
            raise ValueError("duplicate words in vocabulary")
        rng = np.random.default_rng(rng_seed)
        scale = 1.0 / np.sqrt(dim)
        # last row is the unknown-word vector
        self.matrix = rng.normal(0.0, scale, size=(len(self.vocab) + 1, dim))
        self.frozen = False

    @classmethod
    def from_corpus(cls, corpus: Corpus, dim: int = DEFAULT_DIM,
                    rng_seed: int = 0) -> "EmbeddingTable":
        seen: list[str] = []
        index: set[str] = set()
        for _, _, tok in corpus.iter_tokens():
            w = tok.surface.lower()
            if w not in index:
                index.add(w)
                seen.append(w)
        return cls(seen, dim, rng_seed)

    @property
    def unk_index(self) -> int:
        return len(self.vocab)

    @property
    def unk_vector(self) -> np.ndarray:
        return self.matrix[self.unk_index]

    def word_index(self, word: str) -> int:
        return self._index.get(word.lower(), self.unk_index)

    def embed(self, word: str) -> np.ndarray:
        """Return the word's vector, or the unknown vector for OOV words."""
        return self.matrix[self.word_index(word)]

    def freeze(self) -> None:
        self.frozen = True
        self.matrix.setflags(write=False)


def validate_window(n: int) -> int:
    """A context window must be a positive odd integer."""
    if n < 1 or n % 2 == 0:
        raise ValueError(f"window size must be a positive odd integer, got {n}")
    return n


def window_indices(sentence_len: int, i: int, n: int) -> list[int]:
    """In-bounds token indices of the size-``n`` window centered at ``i``."""
    if not 0 <= i < sentence_len:
        raise IndexError(f"token index {i} out of range for sentence of length {sentence_len}")
    half = (n - 1) // 2
    return list(range(max(0, i - half), min(sentence_len, i + half + 1)))


def ngram_average(sentence: Sentence, i: int, n: int, table: EmbeddingTable) -> np.ndarray:
    """Mean embedding of the window of ``n`` tokens centered at position ``i``.

    At sentence boundaries the window is truncated and the mean is taken over
    the tokens actually present (the divisor is the in-bounds count, not
    ``n``).  With ``n=1`` this is exactly the center word's vector.
    """
    validate_window(n)
    idxs = window_indices(len(sentence), i, n)
    rows = [table.word_index(sentence.tokens[j].surface) for j in idxs]
    return table.matrix[rows].mean(axis=0)


def sentence_windows(sentence: Sentence, n: int, table: EmbeddingTable) -> np.ndarray:
    """Stacked window averages for every token of a sentence, shape (len, dim)."""
    return np.stack([ngram_average(sentence, i, n, table) for i in range(len(sentence))])
