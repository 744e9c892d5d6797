"""Q-learning relabeler: learns to move mislabeled tokens to better labels.

A state pairs a token's context-window vector with a candidate label; an
action replaces that label (the window vector never changes).  The reward
compares two distances: how far the base tagger's distribution is from the
gold label versus how far the state's label is from it, so a state holding
the right label where the base tagger went wrong earns a high reward.
Training runs episodes from randomly drawn (token, label) states, stores
transitions in a bounded FIFO replay memory, and fits the Q-network by
one-step temporal-difference updates on uniformly resampled transitions.
At inference only tokens the base tagger was unsure about are relabeled:
the greedy policy is applied from the base tagger's argmax label until it
reaches a fixed point or a step budget runs out.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .base_tagger import PredictionSet
from .corpus import Corpus, Sentence
from .embeddings import EmbeddingTable, ngram_average, sentence_windows, validate_window
from .neural import Adam, DenseNet

DEFAULT_MEMORY_SIZE = 5000
DEFAULT_REWARD_EPS = 1e-8
# Floor applied to the distance inside the log.  Small enough that tanh still
# saturates to the -1 limit when the base prediction is exactly right, large
# enough to keep the log finite.
_LOG_FLOOR = 1e-300


def reward(o_true: np.ndarray, o_state: np.ndarray, p: np.ndarray,
           eps: float = DEFAULT_REWARD_EPS) -> float:
    """Reward of a state: tanh(log(|o_true - p| / (|o_state - o_true| + eps))).

    Distances are L2 norms; ``eps`` keeps the denominator non-zero.  The
    value always lies in [-1, 1]: near +1 when the state's label is right
    and the base prediction is far off, near -1 when the base prediction is
    already (almost) exact, and exactly -1 in the limit where it is perfect.
    """
    o_true = np.asarray(o_true, dtype=np.float64)
    o_state = np.asarray(o_state, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    _check_onehot(o_true, "o_true")
    _check_onehot(o_state, "o_state")
    if (p < 0).any() or not math.isclose(float(p.sum()), 1.0, abs_tol=1e-6):
        raise ValueError("p is not a probability distribution")
    num = float(np.linalg.norm(o_true - p))
    den = float(np.linalg.norm(o_state - o_true)) + eps
    return math.tanh(math.log(max(num, _LOG_FLOOR) / den))


def _check_onehot(v: np.ndarray, name: str) -> None:
    if v.ndim != 1 or not np.all((v == 0.0) | (v == 1.0)) or v.sum() != 1.0:
        raise ValueError(f"{name} must be a one-hot vector")


def reward_matrix(probs: np.ndarray, gold: np.ndarray,
                  eps: float = DEFAULT_REWARD_EPS) -> np.ndarray:
    """Rewards for every (token, state label) pair, shape (tokens, labels).

    Vectorized form of :func:`reward` for one-hot state labels; used to
    precompute episode rewards once per training run.
    """
    n, w = probs.shape
    diff = probs.copy()
    diff[np.arange(n), gold] -= 1.0
    num = np.sqrt((diff * diff).sum(axis=1))           # |o_gold - p| per token
    den = np.full((n, w), np.sqrt(2.0) + eps)          # one-hots differ -> sqrt(2)
    den[np.arange(n), gold] = eps
    return np.tanh(np.log(np.maximum(num, _LOG_FLOOR)[:, None] / den))


@dataclass(frozen=True)
class TokenState:
    """Window vector plus candidate label, with the concatenated encoding."""

    vec: np.ndarray
    label: int
    encoded: np.ndarray

    @classmethod
    def build(cls, vec: np.ndarray, label: int, num_labels: int) -> "TokenState":
        if not 0 <= label < num_labels:
            raise ValueError(f"label {label} out of range for {num_labels} labels")
        onehot = np.zeros(num_labels)
        onehot[label] = 1.0
        return cls(vec, label, np.concatenate([vec, onehot]))


def make_state(sentence: Sentence, i: int, label: int, table: EmbeddingTable,
               window: int, num_labels: int) -> TokenState:
    """State for token ``i`` of a sentence under a candidate label."""
    vec = ngram_average(sentence, i, window, table)
    return TokenState.build(vec, label, num_labels)


@dataclass(frozen=True)
class Experience:
    """One stored transition: acting changed the label, never the window."""

    state: TokenState
    reward: float
    action: int
    next_state: TokenState
    terminal: bool = False


class ReplayMemory:
    """Bounded FIFO store of experiences; oldest entry is evicted first."""

    def __init__(self, capacity: int = DEFAULT_MEMORY_SIZE):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._queue: deque[Experience] = deque(maxlen=capacity)

    def push(self, e: Experience) -> None:
        if not -1.0 <= e.reward <= 1.0:
            raise ValueError(f"reward {e.reward} outside [-1, 1]")
        if e.next_state.label != e.action:
            raise ValueError("next state's label must equal the action taken")
        if not np.array_equal(e.next_state.vec, e.state.vec):
            raise ValueError("actions may not change the window vector")
        self._queue.append(e)

    def __len__(self) -> int:
        return len(self._queue)

    def __getitem__(self, idx: int) -> Experience:
        return self._queue[idx]

    def __iter__(self):
        return iter(self._queue)


@dataclass
class EpisodeBudget:
    """Hard cap on steps per episode (and per relabeling walk)."""

    max_steps: int

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")

    @classmethod
    def default_for(cls, num_labels: int) -> "EpisodeBudget":
        return cls(2 * num_labels)


class RelabelModel:
    """Q-network over encoded states, one output value per label/action."""

    def __init__(self, qnet: DenseNet, num_labels: int, window: int = 3,
                 discount: float = 0.9, reward_eps: float = DEFAULT_REWARD_EPS,
                 threshold: float = 0.95):
        validate_window(window)
        if not 0.0 < discount < 1.0:
            raise ValueError(f"discount must be in (0, 1), got {discount}")
        if qnet.out_dim != num_labels:
            raise ValueError(f"Q-net emits {qnet.out_dim} values for {num_labels} labels")
        self.qnet = qnet
        self.num_labels = num_labels
        self.window = window
        self.discount = discount
        self.reward_eps = reward_eps
        self.threshold = threshold

    @classmethod
    def build(cls, dim: int, num_labels: int, hidden: tuple[int, ...] = (100, 100),
              activation: str = "tanh", rng_seed: int = 0, **kwargs) -> "RelabelModel":
        qnet = DenseNet([dim + num_labels, *hidden, num_labels],
                        activation=activation, rng_seed=rng_seed)
        return cls(qnet, num_labels, **kwargs)

    @property
    def state_dim(self) -> int:
        return self.qnet.in_dim


def select_action(model: RelabelModel, state: TokenState) -> int:
    """Greedy action: argmax of the Q-values, lowest label id on ties."""
    q = model.qnet.forward(state.encoded)
    return int(np.argmax(q))


def td_loss(model: RelabelModel, e: Experience,
            discount: float | None = None) -> tuple[float, list[np.ndarray]]:
    """Squared TD error of one transition and its parameter gradients.

    Target is ``reward + discount * max_a Q(next, a)``, with the bootstrap
    term treated as a constant (no gradient flows through the next state)
    and dropped entirely for terminal transitions.
    """
    g = model.discount if discount is None else discount
    if e.terminal:
        target = e.reward
    else:
        target = e.reward + g * float(model.qnet.forward(e.next_state.encoded).max())
    q, cache = model.qnet.forward_cached(e.state.encoded)
    delta = float(q[e.action]) - target
    out_grad = np.zeros(model.num_labels)
    out_grad[e.action] = 2.0 * delta
    return delta * delta, model.qnet.backward(cache, out_grad)


@dataclass
class TrainingLog:
    """Per-update losses and per-episode lengths from one training run."""

    updates: list[tuple[int, int, float, float]] = field(default_factory=list)
    episodes: list[tuple[int, int]] = field(default_factory=list)

    def record_update(self, iteration: int, episode: int, loss: float, epsilon: float):
        self.updates.append((iteration, episode, loss, epsilon))

    def record_episode(self, episode: int, length: int):
        self.episodes.append((episode, length))

    def quartile_mean_lengths(self) -> tuple[float, float]:
        """Mean episode length over the first and last quarter of episodes."""
        lengths = [l for _, l in self.episodes]
        q = max(1, len(lengths) // 4)
        return float(np.mean(lengths[:q])), float(np.mean(lengths[-q:]))

    def save_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for it, ep, loss, eps in self.updates:
                fh.write(json.dumps({"kind": "update", "iteration": it, "episode": ep,
                                     "loss": loss, "epsilon": eps}, sort_keys=True) + "\n")
            for ep, length in self.episodes:
                fh.write(json.dumps({"kind": "episode", "episode": ep,
                                     "length": length}, sort_keys=True) + "\n")


def _token_arrays(corpus: Corpus, predictions: PredictionSet, table: EmbeddingTable,
                  window: int):
    """Window vectors, gold labels and base distributions in corpus order."""
    if len(predictions.probs) != len(corpus.sentences):
        raise ValueError("predictions do not cover the corpus (sentence count differs)")
    vecs = []
    for si, sent in enumerate(corpus.sentences):
        if predictions.probs[si].shape[0] != len(sent):
            raise ValueError(f"sentence {si}: prediction missing for some tokens")
        vecs.append(sentence_windows(sent, window, table))
    vectors = np.concatenate(vecs, axis=0)
    gold = np.array([t.gold_label for _, _, t in corpus.iter_tokens()], dtype=np.intp)
    probs = np.concatenate(predictions.probs, axis=0)
    return vectors, gold, probs


def train(model: RelabelModel, corpus: Corpus, predictions: PredictionSet,
          table: EmbeddingTable, *, episodes: int, batch_size: int,
          memory_size: int = DEFAULT_MEMORY_SIZE, budget: EpisodeBudget | None = None,
          exploration: float = 0.0, learning_rate: float = 1e-3,
          learning_rate_final: float | None = None,
          seed: int = 0, replay_seed: int = 1) -> tuple[RelabelModel, TrainingLog]:
    """Experience-replay training of the Q-network.

    Each episode draws a random training token and a uniform random starting
    label, then walks greedily (epsilon-greedy when ``exploration`` > 0)
    until the label matches the gold label or the step budget runs out.
    Every step pushes one transition and triggers ``batch_size`` Q-updates
    on uniformly sampled stored transitions.  Rewards are computed once, at
    transition-creation time.  When ``learning_rate_final`` is set the step
    size decays geometrically per episode down to that value, which damps
    late-training policy churn.  Fully deterministic given the two seeds.
    """
    w = model.num_labels
    if not 0.0 <= exploration <= 1.0:
        raise ValueError(f"exploration rate must be in [0, 1], got {exploration}")
    if learning_rate_final is not None and not 0.0 < learning_rate_final <= learning_rate:
        raise ValueError("learning_rate_final must be in (0, learning_rate]")
    budget = budget or EpisodeBudget.default_for(w)
    vectors, gold, probs = _token_arrays(corpus, predictions, table, model.window)
    rewards = reward_matrix(probs, gold, model.reward_eps)
    n_tokens = vectors.shape[0]

    mem = ReplayMemory(memory_size)
    opt = Adam(learning_rate)
    rng = np.random.default_rng(seed)
    replay_rng = np.random.default_rng(replay_seed)
    log = TrainingLog()
    iteration = 0

    for episode in range(episodes):
        if learning_rate_final is not None and episodes > 1:
            frac = episode / (episodes - 1)
            opt.learning_rate = learning_rate * (learning_rate_final / learning_rate) ** frac
        t = int(rng.integers(n_tokens))
        label = int(rng.integers(w))
        target_label = int(gold[t])
        vec = vectors[t]
        length = 0
        while label != target_label and length < budget.max_steps:
            state = TokenState.build(vec, label, w)
            if exploration > 0.0 and rng.random() < exploration:
                action = int(rng.integers(w))
            else:
                action = select_action(model, state)
            next_state = TokenState.build(vec, action, w)
            terminal = action == target_label or length + 1 >= budget.max_steps
            mem.push(Experience(state, float(rewards[t, label]), action,
                                next_state, terminal))
            for _ in range(batch_size):
                sample = mem[int(replay_rng.integers(len(mem)))]
                loss, grads = td_loss(model, sample)
                opt.update(model.qnet.parameters(), grads)
                iteration += 1
                log.record_update(iteration, episode, loss, exploration)
            model.qnet.check_finite()
            label = action
            length += 1
        log.record_episode(episode, length)
    return model, log


def relabel(model: RelabelModel, corpus: Corpus, positions: list[tuple[int, int]],
            predictions: PredictionSet, table: EmbeddingTable,
            budget: EpisodeBudget | None = None) -> dict[tuple[int, int], int]:
    """Relabel the given low-confidence token positions.

    Each walk starts from the base tagger's argmax label and follows the
    greedy policy until it maps a label to itself or the budget is spent;
    the last label reached is the output.
    """
    budget = budget or EpisodeBudget.default_for(model.num_labels)
    out: dict[tuple[int, int], int] = {}
    for si, ti in positions:
        vec = ngram_average(corpus.sentences[si], ti, model.window, table)
        label = predictions.argmax_label(si, ti)
        for _ in range(budget.max_steps):
            action = select_action(model, TokenState.build(vec, label, model.num_labels))
            if action == label:
                break
            label = action
        out[(si, ti)] = label
    return out


def combine_outputs(corpus: Corpus, confident: dict[tuple[int, int], int],
                    relabeled: dict[tuple[int, int], int]) -> list[list[int]]:
    """Merge confident base labels with relabeler outputs into full output.

    The two maps must partition the corpus token positions exactly; any
    overlap or gap raises ``ValueError`` naming the first offending position.
    """
    overlap = set(confident) & set(relabeled)
    if overlap:
        raise ValueError(f"token {min(overlap)} present in both partitions")
    merged: list[list[int]] = []
    for si, sent in enumerate(corpus.sentences):
        row = []
        for ti in range(len(sent)):
            key = (si, ti)
            if key in confident:
                row.append(confident[key])
            elif key in relabeled:
                row.append(relabeled[key])
            else:
                raise ValueError(f"token {key} missing from both partitions")
        merged.append(row)
    total = sum(len(s) for s in merged)
    if total != len(confident) + len(relabeled):
        raise ValueError("partitions contain positions outside the corpus")
    return merged
