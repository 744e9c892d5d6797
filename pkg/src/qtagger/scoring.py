"""Chunk-level precision/recall/F1, token accuracy, and error-group shares.

Chunks follow BIO2: a chunk opens with B-TYPE and continues through I-TYPE
tokens; O is outside.  An I-TYPE with no compatible predecessor opens a new
chunk (lenient repair, matching the reference CoNLL scorer), so slightly
malformed sequences still score.  Slot-filling labels use the same B-/I-/O
shapes and are scored identically, at the chunk level.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .corpus import Corpus, TagInventory


@dataclass(frozen=True)
class Chunk:
    type: str
    start: int
    end: int  # exclusive

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty chunk span [{self.start}, {self.end})")


def _split_bio(label: str) -> tuple[str, str]:
    if label == "O":
        return "O", ""
    if label.startswith("B-") or label.startswith("I-"):
        return label[0], label[2:]
    raise ValueError(f"label {label!r} is not BIO2 (expected O, B-... or I-...)")


def extract_chunks(labels: list[str]) -> list[Chunk]:
    """Maximal chunk spans of one sentence's BIO2 label sequence."""
    chunks: list[Chunk] = []
    cur_type: str | None = None
    cur_start = 0
    for i, label in enumerate(labels):
        marker, ctype = _split_bio(label)
        if marker == "O":
            if cur_type is not None:
                chunks.append(Chunk(cur_type, cur_start, i))
                cur_type = None
        elif marker == "B" or ctype != cur_type:
            # B- always opens; an orphan/incompatible I- opens too (repair)
            if cur_type is not None:
                chunks.append(Chunk(cur_type, cur_start, i))
            cur_type, cur_start = ctype, i
    if cur_type is not None:
        chunks.append(Chunk(cur_type, cur_start, len(labels)))
    return chunks


def _f1(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class TypeScore:
    gold: int = 0
    predicted: int = 0
    correct: int = 0

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        return _f1(self.precision, self.recall)


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    token_accuracy: float
    gold_chunks: int
    predicted_chunks: int
    correct_chunks: int
    per_type: dict[str, TypeScore] = field(default_factory=dict)
    wrong_total: int = 0
    wrong_minority: int = 0
    wrong_majority: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def minority_share(self) -> float:
        return self.wrong_minority / self.wrong_total if self.wrong_total else 0.0

    @property
    def majority_share(self) -> float:
        return self.wrong_majority / self.wrong_total if self.wrong_total else 0.0

    def to_keyvalues(self) -> list[tuple[str, object]]:
        kv: list[tuple[str, object]] = [
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("token_accuracy", self.token_accuracy),
            ("gold_chunks", self.gold_chunks),
            ("predicted_chunks", self.predicted_chunks),
            ("correct_chunks", self.correct_chunks),
            ("wrong_tokens_total", self.wrong_total),
            ("wrong_tokens_minority", self.wrong_minority),
            ("wrong_tokens_majority", self.wrong_majority),
            ("wrong_share_minority", self.minority_share),
            ("wrong_share_majority", self.majority_share),
        ]
        for name in sorted(self.per_type):
            s = self.per_type[name]
            kv.append((f"type_{name}_f1", s.f1))
        return kv

    def to_text(self) -> str:
        lines = ["scoring convention: chunk-level exact (type, span) match"]
        lines += self.notes
        lines.append(
            f"chunks: gold {self.gold_chunks}, predicted {self.predicted_chunks}, "
            f"correct {self.correct_chunks}")
        lines.append(
            f"precision {self.precision:.4f}  recall {self.recall:.4f}  "
            f"f1 {self.f1:.4f}  token accuracy {self.token_accuracy:.4f}")
        for name in sorted(self.per_type):
            s = self.per_type[name]
            lines.append(f"  {name:>12}: P {s.precision:.4f} R {s.recall:.4f} "
                         f"F1 {s.f1:.4f} ({s.gold} gold / {s.predicted} predicted)")
        if self.wrong_total:
            lines.append(
                f"wrongly labeled tokens: {self.wrong_total} "
                f"(minority {self.minority_share:.1%}, majority {self.majority_share:.1%})")
        else:
            lines.append("wrongly labeled tokens: 0")
        return "\n".join(lines)


def chunk_f1(gold_labels: list[list[str]], pred_labels: list[list[str]]) -> EvalReport:
    """Corpus-level chunk F1: correct = exact (sentence, type, span) matches."""
    if len(gold_labels) != len(pred_labels):
        raise ValueError(
            f"sentence count mismatch: {len(gold_labels)} gold vs {len(pred_labels)} predicted")
    per_type: dict[str, TypeScore] = {}
    gold_total = pred_total = correct_total = 0
    right_tokens = all_tokens = 0
    for si, (g_row, p_row) in enumerate(zip(gold_labels, pred_labels)):
        if len(g_row) != len(p_row):
            raise ValueError(f"sentence {si}: token count mismatch "
                             f"({len(g_row)} gold vs {len(p_row)} predicted)")
        g_chunks = set(extract_chunks(g_row))
        p_chunks = set(extract_chunks(p_row))
        for c in g_chunks:
            per_type.setdefault(c.type, TypeScore()).gold += 1
        for c in p_chunks:
            per_type.setdefault(c.type, TypeScore()).predicted += 1
        for c in g_chunks & p_chunks:
            per_type[c.type].correct += 1
        gold_total += len(g_chunks)
        pred_total += len(p_chunks)
        correct_total += len(g_chunks & p_chunks)
        right_tokens += sum(1 for g, p in zip(g_row, p_row) if g == p)
        all_tokens += len(g_row)
    precision = correct_total / pred_total if pred_total else 0.0
    recall = correct_total / gold_total if gold_total else 0.0
    accuracy = right_tokens / all_tokens if all_tokens else 0.0
    return EvalReport(precision, recall, _f1(precision, recall), accuracy,
                      gold_total, pred_total, correct_total, per_type)


@dataclass
class ErrorDistribution:
    """Where the wrong tokens live: minority vs majority gold labels."""

    total: int
    minority: int
    majority: int
    per_label: Counter

    @property
    def minority_share(self) -> float:
        return self.minority / self.total if self.total else 0.0

    @property
    def majority_share(self) -> float:
        return self.majority / self.total if self.total else 0.0


def error_distribution(gold_labels: list[list[str]], pred_labels: list[list[str]],
                       minority: TagInventory | set[str]) -> ErrorDistribution:
    """Group wrongly labeled tokens by their gold label's minority status.

    ``minority`` is either the set of minority label names or an inventory
    carrying training-split counts (the partition is defined on training
    data either way).
    """
    if isinstance(minority, TagInventory):
        minority = set(minority.minority_labels())
    if len(gold_labels) != len(pred_labels):
        raise ValueError("sentence count mismatch between gold and predictions")
    wrong = Counter()
    for si, (g_row, p_row) in enumerate(zip(gold_labels, pred_labels)):
        if len(g_row) != len(p_row):
            raise ValueError(f"sentence {si}: token count mismatch")
        for g, p in zip(g_row, p_row):
            if g != p:
                wrong[g] += 1
    wrong_minority = sum(c for label, c in wrong.items() if label in minority)
    total = sum(wrong.values())
    return ErrorDistribution(total, wrong_minority, total - wrong_minority, wrong)


def evaluate(corpus: Corpus, pred_labels: list[list[str]],
             minority: TagInventory | set[str] | None = None,
             notes: list[str] | None = None) -> EvalReport:
    """Full report: chunk F1 plus the minority/majority error breakdown."""
    if minority is None:
        minority = corpus.inventory
    gold = [[corpus.inventory.name(t.gold_label) for t in s] for s in corpus.sentences]
    report = chunk_f1(gold, pred_labels)
    dist = error_distribution(gold, pred_labels, minority)
    report.wrong_total = dist.total
    report.wrong_minority = dist.minority
    report.wrong_majority = dist.majority
    if notes:
        report.notes.extend(notes)
    return report
