"""Probability-emitting base tagger and the prediction interchange format.

Any tagger that produces one probability vector per token (non-negative,
summing to 1 within 1e-9) can drive the relabeler: either call it in
process, or write its output to the prediction file format below and load
it with :meth:`PredictionSet.load`.  The built-in
:class:`WindowSoftmaxTagger` (a softmax classifier over context-window
averaged embeddings) exists so the package is self-contained.

Prediction file format (text, utf-8), the plug-in point for external taggers::

    # qtagger-predictions 1
    # labels: O B-PER I-PER
    # minority: I-PER            <- optional, training-split minority labels
    <sent_idx> <tok_idx> <gold_label or -> <p_0> ... <p_{w-1}>

Records are whitespace-delimited, one per token, in corpus order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .corpus import Corpus, ParseError, Sentence
from .embeddings import EmbeddingTable, sentence_windows, validate_window
from .neural import DenseNet, make_optimizer, softmax, softmax_xent_grad

_FORMAT_TAG = "# qtagger-predictions 1"
_SUM_TOLERANCE = 1e-6  # for externally produced files; our own writer is exact


class PredictionSet:
    """Per-token probability distributions over a fixed label list."""

    def __init__(self, labels: list[str], probs: list[np.ndarray],
                 gold: list[list[str]] | None = None,
                 minority: list[str] | None = None):
        self.labels = list(labels)
        self.probs = probs
        self.gold = gold
        self.minority = list(minority) if minority is not None else None
        w = len(self.labels)
        for si, arr in enumerate(probs):
            if arr.ndim != 2 or arr.shape[1] != w:
                raise ValueError(f"sentence {si}: expected (len, {w}) probabilities")

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def num_tokens(self) -> int:
        return sum(arr.shape[0] for arr in self.probs)

    def distribution(self, sent_idx: int, tok_idx: int) -> np.ndarray:
        return self.probs[sent_idx][tok_idx]

    def max_prob(self, sent_idx: int, tok_idx: int) -> float:
        return float(self.probs[sent_idx][tok_idx].max())

    def argmax_label(self, sent_idx: int, tok_idx: int) -> int:
        return int(np.argmax(self.probs[sent_idx][tok_idx]))

    def argmax_labels(self) -> list[list[int]]:
        return [list(np.argmax(arr, axis=1)) for arr in self.probs]

    def save(self, path: str | Path | IO[str]) -> None:
        lines = [_FORMAT_TAG, "# labels: " + " ".join(self.labels)]
        if self.minority is not None:
            lines.append("# minority: " + " ".join(self.minority))
        for si, arr in enumerate(self.probs):
            for ti in range(arr.shape[0]):
                gold = self.gold[si][ti] if self.gold is not None else "-"
                vals = " ".join(f"{p:.17g}" for p in arr[ti])
                lines.append(f"{si} {ti} {gold} {vals}")
        text = "\n".join(lines) + "\n"
        if isinstance(path, (str, Path)):
            Path(path).write_text(text, encoding="utf-8")
        else:
            path.write(text)

    @classmethod
    def load(cls, path: str | Path | IO[str]) -> "PredictionSet":
        if isinstance(path, (str, Path)):
            text = Path(path).read_text(encoding="utf-8")
        else:
            text = path.read()
        lines = text.splitlines()
        if not lines or lines[0].strip() != _FORMAT_TAG:
            raise ParseError("not a qtagger prediction file (missing format tag)")
        labels: list[str] | None = None
        minority: list[str] | None = None
        rows: dict[int, dict[int, tuple[str, np.ndarray]]] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# labels:"):
                    labels = line[len("# labels:"):].split()
                elif line.startswith("# minority:"):
                    minority = line[len("# minority:"):].split()
                continue
            if labels is None:
                raise ParseError(f"line {lineno}: record before '# labels:' header")
            parts = line.split()
            if len(parts) != 3 + len(labels):
                raise ParseError(
                    f"line {lineno}: expected {3 + len(labels)} fields, got {len(parts)}")
            si, ti = int(parts[0]), int(parts[1])
            gold = parts[2]
            p = np.array([float(x) for x in parts[3:]], dtype=np.float64)
            if (p < 0).any() or abs(p.sum() - 1.0) > _SUM_TOLERANCE:
                raise ParseError(f"line {lineno}: not a probability distribution")
            rows.setdefault(si, {})[ti] = (gold, p)
        if labels is None or not rows:
            raise ParseError("prediction file contains no records")
        n_sent = max(rows) + 1
        probs, gold_out = [], []
        have_gold = False
        for si in range(n_sent):
            sent = rows.get(si)
            if sent is None or sorted(sent) != list(range(len(sent))):
                raise ParseError(f"sentence {si}: missing or non-contiguous token records")
            probs.append(np.stack([sent[ti][1] for ti in range(len(sent))]))
            gold_out.append([sent[ti][0] for ti in range(len(sent))])
            have_gold = have_gold or any(g != "-" for g, _ in sent.values())
        return cls(labels, probs, gold_out if have_gold else None, minority)


@dataclass
class FilterResult:
    """Exhaustive, disjoint split of token positions by base-tagger confidence."""

    confident: list[tuple[int, int]]
    filtered: list[tuple[int, int]]

    @property
    def total(self) -> int:
        return len(self.confident) + len(self.filtered)

    @property
    def filtered_fraction(self) -> float:
        return len(self.filtered) / self.total if self.total else 0.0


def confidence_filter(predictions: PredictionSet, threshold: float) -> FilterResult:
    """Split tokens into confident vs. low-confidence (max prob < threshold).

    Confident tokens keep the base tagger's argmax label; the low-confidence
    set is what gets handed to the relabeler.  The guideline for picking the
    threshold is to filter roughly the same fraction of tokens as the
    minority labels hold in the training data.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"confidence threshold must be in (0, 1], got {threshold}")
    confident, filtered = [], []
    for si, arr in enumerate(predictions.probs):
        maxes = arr.max(axis=1)
        for ti in range(arr.shape[0]):
            if maxes[ti] < threshold:
                filtered.append((si, ti))
            else:
                confident.append((si, ti))
    return FilterResult(confident, filtered)


class WindowSoftmaxTagger:
    """Softmax classifier over context-window averaged word embeddings.

    The embedding table is part of the model and receives gradient updates
    during training; it is frozen afterwards so the relabeler sees the same
    word features the classifier was trained with.
    """

    def __init__(self, table: EmbeddingTable, labels: list[str], window: int = 3,
                 hidden: tuple[int, ...] = (), activation: str = "tanh",
                 rng_seed: int = 0):
        validate_window(window)
        self.table = table
        self.labels = list(labels)
        self.window = window
        sizes = [table.dim, *hidden, len(self.labels)]
        self.classifier = DenseNet(sizes, activation=activation, rng_seed=rng_seed)
        self.trained = False

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    def predict_distribution(self, sentence: Sentence) -> np.ndarray:
        """One probability vector per token, shape (len(sentence), num_labels)."""
        if not self.trained:
            raise RuntimeError("tagger has not been trained")
        feats = sentence_windows(sentence, self.window, self.table)
        return softmax(self.classifier.forward(feats))

    def predict_corpus(self, corpus: Corpus, minority: list[str] | None = None) -> PredictionSet:
        probs = [self.predict_distribution(s) for s in corpus.sentences]
        gold = [[corpus.inventory.name(t.gold_label) for t in s] for s in corpus.sentences]
        return PredictionSet(self.labels, probs, gold, minority)


@dataclass
class BaseTrainLog:
    initial_loss: float
    epoch_losses: list[float]
    final_accuracy: float

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else self.initial_loss


def _window_index_matrix(corpus: Corpus, table: EmbeddingTable, window: int):
    """Padded (num_instances, window) embedding-row indices plus masks."""
    half = (window - 1) // 2
    rows = np.full((corpus.num_tokens, window), table.unk_index, dtype=np.intp)
    mask = np.zeros((corpus.num_tokens, window), dtype=np.float64)
    gold = np.empty(corpus.num_tokens, dtype=np.intp)
    pos = 0
    for sent in corpus.sentences:
        sent_rows = [table.word_index(t.surface) for t in sent.tokens]
        for i, tok in enumerate(sent.tokens):
            lo, hi = max(0, i - half), min(len(sent), i + half + 1)
            for k, j in enumerate(range(lo, hi)):
                rows[pos, k] = sent_rows[j]
                mask[pos, k] = 1.0
            gold[pos] = tok.gold_label
            pos += 1
    counts = mask.sum(axis=1, keepdims=True)
    return rows, mask, counts, gold


def train_base(corpus: Corpus, *, dim: int = 128, window: int = 3,
               hidden: tuple[int, ...] = (), activation: str = "tanh",
               epochs: int = 20, batch_size: int = 16, learning_rate: float = 1e-2,
               optimizer: str = "adam", rng_seed: int = 0) -> tuple[WindowSoftmaxTagger, BaseTrainLog]:
    """Train a WindowSoftmaxTagger (embeddings included) on a corpus.

    Deterministic for a fixed seed.  Returns the trained tagger (embedding
    table frozen) and a per-epoch loss log; the final training cross-entropy
    is expected to be below the value at initialization.
    """
    if not corpus.sentences:
        raise ValueError("cannot train on an empty corpus")
    labels = list(corpus.inventory.labels)
    table = EmbeddingTable.from_corpus(corpus, dim=dim, rng_seed=rng_seed)
    tagger = WindowSoftmaxTagger(table, labels, window=window, hidden=hidden,
                                 activation=activation, rng_seed=rng_seed + 1)
    rows, mask, counts, gold = _window_index_matrix(corpus, table, window)
    n = rows.shape[0]
    rng = np.random.default_rng(rng_seed + 2)
    opt = make_optimizer(optimizer, learning_rate)
    net = tagger.classifier

    def batch_inputs(idx):
        # mean of in-window embedding rows; padding rows are masked out
        emb = table.matrix[rows[idx]]                      # (b, window, dim)
        return (emb * mask[idx][:, :, None]).sum(axis=1) / counts[idx]

    def full_loss() -> float:
        logits = net.forward(batch_inputs(np.arange(n)))
        loss, _ = softmax_xent_grad(logits, gold)
        return loss

    initial_loss = full_loss()
    epoch_losses = []
    params = net.parameters() + [table.matrix]
    for _ in range(epochs):
        order = rng.permutation(n)
        running, batches = 0.0, 0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            x = batch_inputs(idx)
            logits, cache = net.forward_cached(x)
            loss, dlogits = softmax_xent_grad(logits, gold[idx])
            net_grads, dx = net.backprop(cache, dlogits)
            emb_grad = np.zeros_like(table.matrix)
            contrib = (dx / counts[idx])[:, None, :] * mask[idx][:, :, None]
            np.add.at(emb_grad, rows[idx].reshape(-1), contrib.reshape(-1, table.dim))
            opt.update(params, net_grads + [emb_grad])
            net.check_finite()
            running += loss
            batches += 1
        epoch_losses.append(running / batches)
    preds = net.forward(batch_inputs(np.arange(n)))
    accuracy = float((np.argmax(preds, axis=1) == gold).mean())
    table.freeze()
    tagger.trained = True
    return tagger, BaseTrainLog(initial_loss, epoch_losses, accuracy)
