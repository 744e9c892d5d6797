"""Single-file model archive with bit-exact round-tripping.

Layout::

    bytes 0..7    magic  b"QTAGARC\\n"
    bytes 8..11   format version, uint32 little-endian
    bytes 12..19  header length in bytes, uint64 little-endian
    header        JSON (utf-8, sorted keys): config, inventory, vocabulary,
                  component metadata, and the array directory
    payload       the directory's arrays back to back, each row-major
                  float64 little-endian

Every float lives in the payload, never in the JSON header, so saving and
reloading reproduces parameters exactly and identical runs produce
identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .base_tagger import WindowSoftmaxTagger
from .corpus import TagInventory
from .embeddings import EmbeddingTable
from .neural import DenseNet
from .relabeler import RelabelModel

MAGIC = b"QTAGARC\n"
VERSION = 1


class ArchiveError(ValueError):
    """Unreadable, corrupt, or version-incompatible archive."""


class ModelArchive:
    """Container for everything a run produces: embeddings, base tagger,
    optional relabeler, tag inventory, and the config that made them."""

    def __init__(self, inventory: TagInventory, table: EmbeddingTable,
                 base: WindowSoftmaxTagger | None = None,
                 relabeler: RelabelModel | None = None,
                 config: dict | None = None):
        self.inventory = inventory
        self.table = table
        self.base = base
        self.relabeler = relabeler
        self.config = config

    @property
    def has_relabeler(self) -> bool:
        return self.relabeler is not None

    def _collect(self) -> tuple[dict, list[np.ndarray]]:
        arrays: list[tuple[str, np.ndarray]] = [("embedding/matrix", self.table.matrix)]

        def net_entries(prefix: str, net: DenseNet):
            for k, (w, b) in enumerate(zip(net.weights, net.biases)):
                arrays.append((f"{prefix}/w{k}", w))
                arrays.append((f"{prefix}/b{k}", b))

        header: dict = {
            "config": self.config,
            "inventory": {
                "labels": self.inventory.labels,
                "counts": self.inventory.counts,
                "minority_threshold": self.inventory.minority_threshold,
            },
            "vocab": self.table.vocab,
            "embedding": {"dim": self.table.dim, "rng_seed": self.table.rng_seed},
            "base": None,
            "relabeler": None,
        }
        if self.base is not None:
            header["base"] = {
                "sizes": self.base.classifier.sizes,
                "activation": self.base.classifier.activation,
                "window": self.base.window,
            }
            net_entries("base", self.base.classifier)
        if self.relabeler is not None:
            header["relabeler"] = {
                "sizes": self.relabeler.qnet.sizes,
                "activation": self.relabeler.qnet.activation,
                "window": self.relabeler.window,
                "discount": self.relabeler.discount,
                "reward_eps": self.relabeler.reward_eps,
                "threshold": self.relabeler.threshold,
            }
            net_entries("relabeler", self.relabeler.qnet)
        header["arrays"] = [{"name": n, "shape": list(a.shape)} for n, a in arrays]
        return header, [a for _, a in arrays]

    def save(self, path: str | Path) -> None:
        header, arrays = self._collect()
        blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(np.uint32(VERSION).tobytes())
            fh.write(np.uint64(len(blob)).tobytes())
            fh.write(blob)
            for a in arrays:
                fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "ModelArchive":
        data = Path(path).read_bytes()
        if data[:8] != MAGIC:
            raise ArchiveError(f"{path}: not a model archive")
        version = int(np.frombuffer(data[8:12], dtype="<u4")[0])
        if version != VERSION:
            raise ArchiveError(f"{path}: archive version {version}, expected {VERSION}")
        hlen = int(np.frombuffer(data[12:20], dtype="<u8")[0])
        header = json.loads(data[20:20 + hlen].decode("utf-8"))
        offset = 20 + hlen
        stored: dict[str, np.ndarray] = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
            stored[spec["name"]] = arr.reshape(shape).copy()
            offset += count * 8
        if offset != len(data):
            raise ArchiveError(f"{path}: trailing or missing payload bytes")

        inv = header["inventory"]
        inventory = TagInventory(inv["labels"], inv["counts"], inv["minority_threshold"])
        emb = header["embedding"]
        table = EmbeddingTable(header["vocab"], dim=emb["dim"], rng_seed=emb["rng_seed"])
        table.matrix = stored["embedding/matrix"]
        table.freeze()

        def load_net(prefix: str, sizes, activation) -> DenseNet:
            net = DenseNet(sizes, activation=activation)
            for k in range(len(net.weights)):
                net.weights[k] = stored[f"{prefix}/w{k}"]
                net.biases[k] = stored[f"{prefix}/b{k}"]
            return net

        base = None
        if header["base"] is not None:
            meta = header["base"]
            base = WindowSoftmaxTagger(table, inventory.labels, window=meta["window"])
            base.classifier = load_net("base", meta["sizes"], meta["activation"])
            base.trained = True

        relabeler = None
        if header["relabeler"] is not None:
            meta = header["relabeler"]
            qnet = load_net("relabeler", meta["sizes"], meta["activation"])
            relabeler = RelabelModel(qnet, len(inventory), window=meta["window"],
                                     discount=meta["discount"],
                                     reward_eps=meta["reward_eps"],
                                     threshold=meta["threshold"])
        return cls(inventory, table, base, relabeler, header["config"])
