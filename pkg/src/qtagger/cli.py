"""Command-line pipeline: train-base, train-dat, infer, eval, stats.

Every command validates its configuration before touching data, writes
outputs under a fixed set of file names, and is deterministic given the
seeds in the config: rerunning a command reproduces its outputs byte for
byte.  Exit codes: 0 success, 1 validation/data error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .archive import ArchiveError, ModelArchive
from .base_tagger import PredictionSet, confidence_filter, train_base
from .config import ConfigError, RunConfig
from .corpus import Corpus, TagInventory, parse_conll, parse_slot_corpus, tag_statistics
from .relabeler import EpisodeBudget, RelabelModel, combine_outputs, relabel, train
from .scoring import evaluate

BASE_ARCHIVE = "base.qtag"
FULL_ARCHIVE = "model.qtag"
PREDICTIONS_FILE = "predictions.txt"
INFER_STATS_FILE = "infer_stats.kv"
EVAL_TEXT_FILE = "eval_report.txt"
EVAL_KV_FILE = "eval_report.kv"
BASE_LOG_FILE = "base_train_log.jsonl"
DAT_LOG_FILE = "dat_train_log.jsonl"


def _load_corpus(path: str, cfg: RunConfig, inventory: TagInventory | None = None,
                 split: str = "train") -> Corpus:
    if cfg.format == "conll":
        return parse_conll(path, (cfg.token_column, cfg.label_column),
                           inventory=inventory,
                           minority_threshold=cfg.minority_threshold, split=split)
    return parse_slot_corpus(path, inventory=inventory,
                             minority_threshold=cfg.minority_threshold, split=split)


def _write_kv(path: Path, pairs) -> None:
    lines = [f"{key} {value}" for key, value in pairs]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    return cfg.merged(_overrides(args))


_CONFIG_KEYS = [
    "format", "train_path", "test_path", "output_dir", "token_column", "label_column",
    "embedding_dim", "window", "minority_threshold", "base_hidden", "base_epochs",
    "base_learning_rate", "activation", "optimizer", "discount", "memory_size",
    "batch_size", "episodes", "confidence_threshold", "reward_eps", "exploration",
    "q_hidden", "q_learning_rate", "max_steps", "seed_init", "seed_replay", "workers",
]


def _overrides(args) -> dict:
    return {key: getattr(args, key) for key in _CONFIG_KEYS if hasattr(args, key)}


def _add_config_flags(p: argparse.ArgumentParser, keys: list[str]) -> None:
    p.add_argument("--config", help="key = value config file")
    flags = {
        "format": dict(choices=["slots", "conll"], help="corpus file format"),
        "train_path": dict(metavar="PATH", help="training corpus"),
        "test_path": dict(metavar="PATH", help="test corpus"),
        "output_dir": dict(metavar="DIR", help="where outputs are written"),
        "token_column": dict(metavar="N", help="conll token column"),
        "label_column": dict(metavar="N", help="conll label column (negative from end)"),
        "embedding_dim": dict(metavar="D", help="word vector size"),
        "window": dict(metavar="N", help="context window (odd)"),
        "minority_threshold": dict(metavar="F", help="minority tag share cutoff"),
        "base_hidden": dict(metavar="H,H", help="base classifier hidden sizes"),
        "base_epochs": dict(metavar="N"),
        "base_learning_rate": dict(metavar="LR"),
        "activation": dict(choices=["tanh", "relu"]),
        "optimizer": dict(choices=["adam", "sgd"]),
        "discount": dict(metavar="G", help="future-reward discount in (0, 1)"),
        "memory_size": dict(metavar="N", help="replay memory capacity"),
        "batch_size": dict(metavar="K", help="updates per step (default 16 slots / 10 conll)"),
        "episodes": dict(metavar="N", help="training episodes"),
        "confidence_threshold": dict(metavar="T", help="route tokens below this to the relabeler"),
        "reward_eps": dict(metavar="E"),
        "exploration": dict(metavar="E", help="epsilon-greedy rate during training"),
        "q_hidden": dict(metavar="H,H", help="Q-network hidden sizes"),
        "q_learning_rate": dict(metavar="LR"),
        "max_steps": dict(metavar="N", help="episode/relabel step budget"),
        "seed_init": dict(metavar="S"),
        "seed_replay": dict(metavar="S"),
        "workers": dict(metavar="N", help="threads for per-sentence prediction"),
    }
    for key in keys:
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, **flags[key])


def _predictions_for(archive: ModelArchive, corpus: Corpus, path: str | None,
                     workers: int = 1) -> PredictionSet:
    minority = archive.inventory.minority_labels()
    if path is not None:
        preds = PredictionSet.load(path)
        if preds.labels != archive.inventory.labels:
            raise ValueError("prediction file labels do not match the model inventory")
        if len(preds.probs) != len(corpus.sentences) or any(
                preds.probs[i].shape[0] != len(s) for i, s in enumerate(corpus.sentences)):
            raise ValueError("prediction file does not align with the corpus")
        preds.minority = minority
        return preds
    if archive.base is None:
        raise ValueError("archive has no base tagger; provide --predictions")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            probs = list(pool.map(archive.base.predict_distribution, corpus.sentences))
    else:
        probs = [archive.base.predict_distribution(s) for s in corpus.sentences]
    gold = [[corpus.inventory.name(t.gold_label) for t in s] for s in corpus.sentences]
    return PredictionSet(archive.inventory.labels, probs, gold, minority)


def cmd_train_base(args) -> int:
    cfg = _config_from_args(args)
    if not cfg.train_path:
        raise ConfigError("train_path is required (--train-path or config file)")
    corpus = _load_corpus(cfg.train_path, cfg, split="train")
    tagger, log = train_base(
        corpus, dim=cfg.embedding_dim, window=cfg.window, hidden=cfg.base_hidden,
        activation=cfg.activation, epochs=cfg.base_epochs,
        batch_size=cfg.effective_batch_size, learning_rate=cfg.base_learning_rate,
        optimizer=cfg.optimizer, rng_seed=cfg.seed_init)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ModelArchive(corpus.inventory, tagger.table, base=tagger,
                 config=cfg.to_dict()).save(out / BASE_ARCHIVE)
    with open(out / BASE_LOG_FILE, "w", encoding="utf-8") as fh:
        fh.write('{"kind":"init","loss":%.17g}\n' % log.initial_loss)
        for i, loss in enumerate(log.epoch_losses):
            fh.write('{"kind":"epoch","epoch":%d,"loss":%.17g}\n' % (i, loss))
    print(f"trained base tagger on {corpus.num_tokens} tokens "
          f"({len(corpus.inventory)} labels)")
    print(f"cross-entropy {log.initial_loss:.4f} -> {log.final_loss:.4f}, "
          f"token accuracy {log.final_accuracy:.4f}")
    print(f"archive written to {out / BASE_ARCHIVE}")
    return 0


def cmd_train_dat(args) -> int:
    archive = ModelArchive.load(args.archive)
    base_cfg = RunConfig.from_dict(archive.config) if archive.config else RunConfig()
    cfg = base_cfg.merged(_overrides(args))
    if getattr(args, "config", None):
        cfg = RunConfig.load(args.config).merged(_overrides(args))
    if not cfg.train_path:
        raise ConfigError("train_path is required")
    corpus = _load_corpus(cfg.train_path, cfg, inventory=archive.inventory, split="train")
    predictions = _predictions_for(archive, corpus, args.predictions, cfg.workers)
    w = len(archive.inventory)
    model = RelabelModel.build(
        archive.table.dim, w, hidden=cfg.q_hidden, activation=cfg.activation,
        rng_seed=cfg.seed_init + 1000, window=cfg.window, discount=cfg.discount,
        reward_eps=cfg.reward_eps, threshold=cfg.confidence_threshold)
    budget = EpisodeBudget(cfg.effective_max_steps(w))
    model, log = train(
        model, corpus, predictions, archive.table, episodes=cfg.episodes,
        batch_size=cfg.effective_batch_size, memory_size=cfg.memory_size,
        budget=budget, exploration=cfg.exploration,
        learning_rate=cfg.q_learning_rate, seed=cfg.seed_init, replay_seed=cfg.seed_replay)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ModelArchive(archive.inventory, archive.table, base=archive.base,
                 relabeler=model, config=cfg.to_dict()).save(out / FULL_ARCHIVE)
    log.save_jsonl(out / DAT_LOG_FILE)
    first_q, last_q = log.quartile_mean_lengths() if log.episodes else (0.0, 0.0)
    print(f"trained relabeler: {cfg.episodes} episodes, "
          f"{len(log.updates)} Q-updates, replay capacity {cfg.memory_size}")
    print(f"mean episode length: first quartile {first_q:.2f}, last quartile {last_q:.2f}")
    print(f"archive written to {out / FULL_ARCHIVE}")
    return 0


def cmd_infer(args) -> int:
    archive = ModelArchive.load(args.archive)
    cfg = RunConfig.from_dict(archive.config) if archive.config else RunConfig()
    cfg = cfg.merged(_overrides(args))
    test_path = cfg.test_path
    if not test_path:
        raise ConfigError("test_path is required (--test-path)")
    corpus = _load_corpus(test_path, cfg, inventory=archive.inventory, split="test")
    predictions = _predictions_for(archive, corpus, args.predictions, cfg.workers)
    threshold = cfg.confidence_threshold
    split = confidence_filter(predictions, threshold)

    base_only = not archive.has_relabeler
    if base_only:
        print("warning: archive has no relabeler; emitting base tagger output only",
              file=sys.stderr)
        relabeled: dict[tuple[int, int], int] = {
            pos: predictions.argmax_label(*pos) for pos in split.filtered}
        changed = 0
    else:
        budget = EpisodeBudget(cfg.effective_max_steps(len(archive.inventory)))
        relabeled = relabel(archive.relabeler, corpus, split.filtered,
                            predictions, archive.table, budget)
        changed = sum(1 for pos, lab in relabeled.items()
                      if lab != predictions.argmax_label(*pos))
    confident = {pos: predictions.argmax_label(*pos) for pos in split.confident}
    merged = combine_outputs(corpus, confident, relabeled)

    # confident tokens keep the base distribution; relabeled tokens get a
    # hard one-hot so the record's argmax is always the final label
    out_probs = []
    w = len(archive.inventory)
    for si, sent in enumerate(corpus.sentences):
        arr = predictions.probs[si].copy()
        for ti in range(len(sent)):
            if (si, ti) in relabeled and not base_only:
                arr[ti] = 0.0
                arr[ti][merged[si][ti]] = 1.0
        out_probs.append(arr)
    gold = [[corpus.inventory.name(t.gold_label) for t in s] for s in corpus.sentences]
    combined = PredictionSet(archive.inventory.labels, out_probs, gold,
                             archive.inventory.minority_labels())
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    combined.save(out / PREDICTIONS_FILE)

    inv = archive.inventory
    minority_fraction = (sum(inv.counts[i] for i in range(len(inv)) if inv.is_minority(i))
                         / inv.total_tokens if inv.total_tokens else 0.0)
    pairs = [
        ("total_tokens", split.total),
        ("filtered_tokens", len(split.filtered)),
        ("filtered_fraction", f"{split.filtered_fraction:.6f}"),
        ("relabeled_changed", changed),
        ("confidence_threshold", threshold),
        ("train_minority_token_fraction", f"{minority_fraction:.6f}"),
        ("base_only_mode", str(base_only).lower()),
    ]
    _write_kv(out / INFER_STATS_FILE, pairs)
    print(f"filtered {len(split.filtered)}/{split.total} tokens "
          f"({split.filtered_fraction:.1%}) at threshold {threshold} "
          f"(training minority token fraction {minority_fraction:.1%})")
    print(f"predictions written to {out / PREDICTIONS_FILE}")
    return 0


def cmd_eval(args) -> int:
    cfg = RunConfig().merged(_overrides(args))
    gold_path = cfg.test_path
    if not gold_path:
        raise ConfigError("test_path is required (--test-path)")
    preds = PredictionSet.load(args.predictions)
    corpus = _load_corpus(gold_path, cfg, split="test")
    if len(preds.probs) != len(corpus.sentences):
        raise ValueError(
            f"sentence count differs: corpus {len(corpus.sentences)}, "
            f"predictions {len(preds.probs)}")
    for si, sent in enumerate(corpus.sentences):
        if preds.probs[si].shape[0] != len(sent):
            raise ValueError(
                f"first divergence at sentence {si}: corpus has {len(sent)} tokens, "
                f"predictions have {preds.probs[si].shape[0]}")
    pred_labels = [[preds.labels[i] for i in np.argmax(arr, axis=1)]
                   for arr in preds.probs]
    notes = []
    if preds.minority is not None:
        minority: set[str] | None = set(preds.minority)
    else:
        minority = None
        notes.append("minority partition derived from the gold corpus "
                     "(prediction file carries no '# minority:' header)")
    report = evaluate(corpus, pred_labels, minority, notes)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / EVAL_TEXT_FILE).write_text(report.to_text() + "\n", encoding="utf-8")
    _write_kv(out / EVAL_KV_FILE, report.to_keyvalues())
    print(report.to_text())
    return 0


def cmd_stats(args) -> int:
    cfg = RunConfig().merged(_overrides(args))
    corpus = _load_corpus(args.corpus, cfg, split="train")
    stats = tag_statistics(corpus)
    pairs = stats.to_keyvalues() + sorted(
        (f"count_{label}", count) for label, count in stats.per_label.items())
    if args.out:
        _write_kv(Path(args.out), pairs)
    else:
        for key, value in pairs:
            print(f"{key} {value}")
    print(stats.to_text(), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtagger",
        description="two-stage sequence tagger: base tagger plus Q-learning relabeler")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-base", help="train the window-softmax base tagger")
    _add_config_flags(p, ["format", "train_path", "output_dir", "token_column",
                          "label_column", "embedding_dim", "window", "minority_threshold",
                          "base_hidden", "base_epochs", "base_learning_rate", "activation",
                          "optimizer", "batch_size", "seed_init"])
    p.set_defaults(func=cmd_train_base)

    p = sub.add_parser("train-dat", help="train the Q-learning relabeler on top of a base archive")
    p.add_argument("archive", help="base archive from train-base")
    p.add_argument("--predictions", default=None,
                   help="training-corpus prediction file from an external base tagger")
    _add_config_flags(p, ["train_path", "output_dir", "discount", "memory_size",
                          "batch_size", "episodes", "confidence_threshold", "reward_eps",
                          "exploration", "q_hidden", "q_learning_rate", "max_steps",
                          "seed_init", "seed_replay", "workers"])
    p.set_defaults(func=cmd_train_dat)

    p = sub.add_parser("infer", help="tag a test corpus, relabeling low-confidence tokens")
    p.add_argument("archive", help="archive from train-dat (or train-base for base-only)")
    p.add_argument("--predictions", default=None,
                   help="test-corpus prediction file from an external base tagger")
    _add_config_flags(p, ["test_path", "output_dir", "confidence_threshold",
                          "max_steps", "workers"])
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score a predictions file against a gold corpus")
    p.add_argument("predictions", help="predictions file (from infer or an external tagger)")
    _add_config_flags(p, ["format", "test_path", "output_dir", "token_column",
                          "label_column", "minority_threshold"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="minority/majority tag statistics of a corpus")
    p.add_argument("corpus", help="corpus file")
    p.add_argument("--out", default=None, help="write the key-value report here")
    _add_config_flags(p, ["format", "token_column", "label_column", "minority_threshold"])
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
