"""Self-contained pretrained backend: fixed hash-bucket embeddings + softmax head.

The "checkpoint" is a seeded embedding table over hashed token buckets.
Fine-tuning trains only the classification head on mean-pooled features,
which makes the backend fast, dependency-free, and fully deterministic —
the reference implementation of the backend interface.
"""

from __future__ import annotations

import json
import time
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ...balance import LossConfig
from ...corpus import CitationInstance, Corpus, LabelScheme
from ...errors import CheckpointError
from ...metrics import EvaluationReport
from ...text import tokenize
from ..losses import loss_and_grad, softmax

CHECKPOINT_KIND = "avgembed-checkpoint"
CHECKPOINT_VERSION = 1


def create_checkpoint(path: str | Path, n_buckets: int = 4096, dim: int = 64, seed: int = 0) -> Path:
    """Write a deterministic embedding-table checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(seed))
    table = rng.normal(0.0, 1.0, size=(n_buckets, dim)) / np.sqrt(dim)
    meta = json.dumps(
        {"kind": CHECKPOINT_KIND, "version": CHECKPOINT_VERSION,
         "n_buckets": n_buckets, "dim": dim, "seed": seed}
    )
    with path.open("wb") as fh:
        np.savez_compressed(fh, table=table, meta=np.frombuffer(meta.encode(), dtype=np.uint8))
    return path


def load_checkpoint(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"avgembed checkpoint not found: {path}")
    try:
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            table = np.asarray(data["table"], dtype=np.float64)
    except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable avgembed checkpoint {path}: {exc}") from exc
    if meta.get("kind") != CHECKPOINT_KIND:
        raise CheckpointError(f"{path} is not an avgembed checkpoint")
    return table


def featurize(texts: Sequence[str], table: np.ndarray) -> np.ndarray:
    """Mean of hashed-bucket embedding rows; crc32 keeps buckets stable across runs."""
    n_buckets = table.shape[0]
    out = np.zeros((len(texts), table.shape[1]))
    for i, text in enumerate(texts):
        tokens = tokenize(text.lower())
        if not tokens:
            continue
        buckets = [zlib.crc32(t.encode()) % n_buckets for t in tokens]
        out[i] = table[buckets].mean(axis=0)
    return out


@dataclass
class AvgEmbedClassifier:
    scheme: LabelScheme
    table: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray
    checkpoint: str = ""
    kind: str = "avgembed"

    def predict(self, instances: Sequence[CitationInstance] | Corpus) -> tuple[np.ndarray, list[int]]:
        feats = featurize([inst.text for inst in instances], self.table)
        probs = softmax(feats @ self.head_w + self.head_b)
        return probs, [int(row.argmax()) for row in probs]

    def parameter_count(self) -> int:
        return int(self.head_w.size + self.head_b.size)


class AvgEmbedBackend:
    name = "avgembed"

    def fine_tune(
        self,
        locator: str,
        train_corpus: Corpus,
        val_corpus: Corpus | None,
        hyperparams: dict,
        seed: int,
    ):
        from ..train import TrainReport  # deferred: models.train imports this package lazily

        table = load_checkpoint(locator)
        scheme = train_corpus.scheme
        epochs = int(hyperparams.get("epochs", 5))
        patience = int(hyperparams.get("patience", 5))
        lr = float(hyperparams.get("learning_rate", 0.2))
        batch_size = int(hyperparams.get("batch_size", 16))

        feats = featurize([inst.text for inst in train_corpus], table)
        labels = np.asarray([inst.label for inst in train_corpus], dtype=np.int64)
        dim, k = table.shape[1], scheme.num_classes

        rng = np.random.Generator(np.random.PCG64(seed))
        w = rng.normal(0.0, 0.01, size=(dim, k))
        b = np.zeros(k)
        m_w = np.zeros_like(w)
        v_w = np.zeros_like(w)
        m_b = np.zeros_like(b)
        v_b = np.zeros_like(b)
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        step = 0

        started = time.perf_counter()
        cfg = LossConfig("cross_entropy")
        train_trace: list[float] = []
        val_trace: list[float] = []
        best: tuple[np.ndarray, np.ndarray] | None = None
        best_metric = -np.inf
        best_epoch: int | None = None
        stale = 0

        for epoch in range(epochs):
            order = rng.permutation(len(labels))
            loss_sum = 0.0
            for start in range(0, len(order), batch_size):
                chunk = order[start : start + batch_size]
                logits = feats[chunk] @ w + b
                value, dlogits = loss_and_grad(logits, labels[chunk], cfg)
                gw = feats[chunk].T @ dlogits
                gb = dlogits.sum(axis=0)
                step += 1
                c1 = 1.0 - beta1**step
                c2 = 1.0 - beta2**step
                m_w = beta1 * m_w + (1 - beta1) * gw
                v_w = beta2 * v_w + (1 - beta2) * gw * gw
                m_b = beta1 * m_b + (1 - beta1) * gb
                v_b = beta2 * v_b + (1 - beta2) * gb * gb
                w -= lr * (m_w / c1) / (np.sqrt(v_w / c2) + eps)
                b -= lr * (m_b / c1) / (np.sqrt(v_b / c2) + eps)
                loss_sum += value * len(chunk)
            train_trace.append(loss_sum / len(labels))

            if val_corpus is not None:
                probe = AvgEmbedClassifier(scheme, table, w.copy(), b.copy(), locator)
                _, predicted = probe.predict(val_corpus)
                gold = [inst.label for inst in val_corpus]
                metric = EvaluationReport.from_predictions(gold, predicted, scheme).macro_f1
                val_trace.append(metric)
                if metric > best_metric:
                    best_metric = metric
                    best = (w.copy(), b.copy())
                    best_epoch = epoch
                    stale = 0
                else:
                    stale += 1
                    if stale >= patience:
                        break
            else:
                best_epoch = epoch

        if best is not None:
            w, b = best

        classifier = AvgEmbedClassifier(scheme, table, w, b, locator)
        report = TrainReport(
            train_loss=tuple(train_trace),
            val_metric=tuple(val_trace),
            best_epoch=best_epoch,
            epochs_run=len(train_trace),
            wall_clock_sec=time.perf_counter() - started,
            seed=seed,
            config_snapshot={"backend": self.name, "checkpoint": locator,
                             "epochs": epochs, "learning_rate": lr, "batch_size": batch_size},
        )
        return classifier, report
