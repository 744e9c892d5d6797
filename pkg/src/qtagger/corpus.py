"""Tagged-corpus loading and label statistics.

Two input formats are supported:

* CoNLL column format: one token per line, whitespace-separated columns,
  blank line between sentences.  ``-DOCSTART-`` lines are skipped.
* Slot format: one utterance per line, a single TAB separating the token
  sequence from the label sequence (both whitespace-separated, equal length).

A parsed :class:`Corpus` is immutable in practice: nothing in this package
mutates it after construction, so it can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

DEFAULT_MINORITY_THRESHOLD = 0.01


class ParseError(ValueError):
    """Malformed corpus input (carries the offending line/record number)."""


@dataclass(frozen=True)
class Token:
    surface: str
    gold_label: int  # index into the owning corpus's TagInventory


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def gold_labels(self) -> list[int]:
        return [t.gold_label for t in self.tokens]


class TagInventory:
    """Ordered label set with per-label training counts.

    Labels whose share of the training tokens falls below
    ``minority_threshold`` form the minority group; the rest are majority.
    The partition is always computed from the counts stored here, which must
    come from the training split.
    """

    def __init__(self, labels: Iterable[str], counts: Iterable[int],
                 minority_threshold: float = DEFAULT_MINORITY_THRESHOLD):
        self.labels = list(labels)
        self.counts = list(counts)
        if len(self.labels) != len(set(self.labels)):
            raise ValueError("duplicate label names in inventory")
        if len(self.labels) != len(self.counts):
            raise ValueError("labels and counts length mismatch")
        if not 0.0 < minority_threshold <= 1.0:
            raise ValueError(f"minority_threshold must be in (0, 1], got {minority_threshold}")
        self.minority_threshold = minority_threshold
        self._index = {name: i for i, name in enumerate(self.labels)}

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"label {name!r} not in inventory") from None

    def name(self, idx: int) -> str:
        return self.labels[idx]

    @property
    def total_tokens(self) -> int:
        return sum(self.counts)

    def is_minority(self, idx: int) -> bool:
        total = self.total_tokens
        if total == 0:
            return False
        return self.counts[idx] / total < self.minority_threshold

    def minority_labels(self) -> list[str]:
        return [l for i, l in enumerate(self.labels) if self.is_minority(i)]

    def majority_labels(self) -> list[str]:
        return [l for i, l in enumerate(self.labels) if not self.is_minority(i)]


@dataclass
class Corpus:
    sentences: list[Sentence]
    inventory: TagInventory
    split: str = "train"  # "train" or "test"

    @property
    def num_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def iter_tokens(self) -> Iterator[tuple[int, int, Token]]:
        """Yield ``(sentence_index, token_index, token)`` in file order."""
        for si, sent in enumerate(self.sentences):
            for ti, tok in enumerate(sent.tokens):
                yield si, ti, tok


def _open_lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    else:  # already a file-like object
        yield from source


def _build_corpus(raw_sentences: list[list[tuple[str, str]]], inventory: TagInventory | None,
                  minority_threshold: float, split: str,
                  where: str) -> Corpus:
    if not raw_sentences:
        raise ParseError(f"{where}: no sentences found")
    if inventory is None:
        order: list[str] = []
        counts: dict[str, int] = {}
        for sent in raw_sentences:
            for _, label in sent:
                if label not in counts:
                    order.append(label)
                    counts[label] = 0
                counts[label] += 1
        inventory = TagInventory(order, [counts[l] for l in order], minority_threshold)
    else:
        for sent in raw_sentences:
            for _, label in sent:
                if label not in inventory:
                    raise ParseError(
                        f"{where}: label {label!r} not present in the training inventory")
    sentences = [
        Sentence(tuple(Token(surface, inventory.index(label)) for surface, label in sent))
        for sent in raw_sentences
    ]
    return Corpus(sentences, inventory, split)


def parse_conll(source: str | Path | IO[str], column_spec: tuple[int, int] = (0, -1),
                inventory: TagInventory | None = None,
                minority_threshold: float = DEFAULT_MINORITY_THRESHOLD,
                split: str = "train") -> Corpus:
    """Parse a CoNLL column file into a Corpus.

    ``column_spec`` is ``(token_column, label_column)``; negative indices
    count from the end of each line.  When ``inventory`` is given (e.g. the
    training inventory while reading a test file), labels outside it raise
    :class:`ParseError` instead of being added silently.
    """
    token_col, label_col = column_spec
    raw: list[list[tuple[str, str]]] = []
    current: list[tuple[str, str]] = []
    for lineno, line in enumerate(_open_lines(source), start=1):
        stripped = line.strip()
        if not stripped:
            if current:
                raw.append(current)
                current = []
            continue
        cols = stripped.split()
        if cols[0] == "-DOCSTART-":
            continue
        if len(cols) < 2:
            raise ParseError(f"line {lineno}: expected at least 2 columns, got {len(cols)}")
        try:
            surface = cols[token_col]
            label = cols[label_col]
        except IndexError:
            raise ParseError(
                f"line {lineno}: column spec {column_spec} out of range for "
                f"{len(cols)}-column line") from None
        current.append((surface, label))
    if current:
        raw.append(current)
    return _build_corpus(raw, inventory, minority_threshold, split, "conll input")


def parse_slot_corpus(source: str | Path | IO[str],
                      inventory: TagInventory | None = None,
                      minority_threshold: float = DEFAULT_MINORITY_THRESHOLD,
                      split: str = "train") -> Corpus:
    """Parse a slot-format file (``tokens<TAB>labels`` per line) into a Corpus."""
    raw: list[list[tuple[str, str]]] = []
    for recno, line in enumerate(_open_lines(source), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise ParseError(
                f"record {recno}: expected 'tokens<TAB>labels', got {len(parts)} field(s)")
        words = parts[0].split()
        labels = parts[1].split()
        if not words:
            raise ParseError(f"record {recno}: empty token sequence")
        if len(words) != len(labels):
            raise ParseError(
                f"record {recno}: {len(words)} tokens but {len(labels)} labels")
        raw.append(list(zip(words, labels)))
    return _build_corpus(raw, inventory, minority_threshold, split, "slot input")


def to_conll(corpus: Corpus) -> str:
    """Serialize a corpus back to two-column CoNLL text."""
    blocks = []
    for sent in corpus.sentences:
        blocks.append("\n".join(
            f"{tok.surface} {corpus.inventory.name(tok.gold_label)}" for tok in sent))
    return "\n\n".join(blocks) + "\n"


def to_slot_lines(corpus: Corpus) -> str:
    """Serialize a corpus back to slot-format text."""
    lines = []
    for sent in corpus.sentences:
        words = " ".join(tok.surface for tok in sent)
        labels = " ".join(corpus.inventory.name(tok.gold_label) for tok in sent)
        lines.append(f"{words}\t{labels}")
    return "\n".join(lines) + "\n"


@dataclass
class TagStatistics:
    """Minority/majority partition of an inventory, Table-style."""

    minority_labels: list[str]
    majority_labels: list[str]
    minority_tokens: int
    majority_tokens: int
    threshold: float
    per_label: dict[str, int] = field(default_factory=dict)

    @property
    def total_tokens(self) -> int:
        return self.minority_tokens + self.majority_tokens

    def to_keyvalues(self) -> list[tuple[str, object]]:
        return [
            ("minority_tag_types", len(self.minority_labels)),
            ("majority_tag_types", len(self.majority_labels)),
            ("minority_tokens", self.minority_tokens),
            ("majority_tokens", self.majority_tokens),
            ("total_tokens", self.total_tokens),
            ("minority_threshold", self.threshold),
        ]

    def to_text(self) -> str:
        lines = [
            f"tag groups at threshold < {self.threshold:g} of all tokens",
            f"  minority: {len(self.minority_labels)} tag types, "
            f"{self.minority_tokens} tokens",
            f"  majority: {len(self.majority_labels)} tag types, "
            f"{self.majority_tokens} tokens",
            f"  total:    {len(self.minority_labels) + len(self.majority_labels)} tag types, "
            f"{self.total_tokens} tokens",
        ]
        return "\n".join(lines)


def tag_statistics(corpus: Corpus) -> TagStatistics:
    """Partition the corpus inventory into minority and majority tag groups.

    Every label lands in exactly one group; the two groups' token counts sum
    to the corpus total.  Counts come from the inventory, i.e. from the
    training split the inventory was built on.
    """
    inv = corpus.inventory
    if inv.total_tokens == 0:
        raise ValueError("empty corpus: no tokens counted")
    minority, majority = [], []
    min_tokens = maj_tokens = 0
    for i, label in enumerate(inv.labels):
        if inv.is_minority(i):
            minority.append(label)
            min_tokens += inv.counts[i]
        else:
            majority.append(label)
            maj_tokens += inv.counts[i]
    per_label = dict(zip(inv.labels, inv.counts))
    return TagStatistics(minority, majority, min_tokens, maj_tokens,
                         inv.minority_threshold, per_label)
