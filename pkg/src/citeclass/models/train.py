"""Classifier configuration, training loop, and prediction.

One contract covers every topology: ``train`` returns a classifier whose
``predict`` emits full probability vectors, deterministic given the seed.
Sampling strategies are applied to the train split only; the test side of
any split never changes.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..balance import (
    LossConfig,
    balance_smote_targets,
    class_weights_from,
    random_upsample,
    smote,
)
from ..corpus import CitationInstance, Corpus, LabelScheme
from ..errors import ConfigError, SchemeError, TrainingDivergedError
from ..metrics import EvaluationReport
from ..splits import balance_downsample
from .losses import loss_and_grad, softmax
from .network import Adam, LSTMNet, Params, RNNNet, TextCNN, parameter_count
from .vocab import Vocabulary, build_vocab, encode_batch

TOPOLOGIES = ("cnn", "lstm", "rnn", "pretrained")
STRATEGIES = ("none", "focal", "smote", "upsample", "class_weights", "downsample_balanced")

_ARCH_RE = re.compile(r"([LFC])\s*([0-9][0-9,]*)")


@dataclass(frozen=True)
class ModelConfig:
    """Topology plus the knobs that define one architecture row."""

    topology: str
    layers: int = 3
    filters: int = 100
    conv_widths: tuple[int, ...] | None = None
    embedding_dim: int = 50
    max_seq_len: int = 256
    dropout: float = 0.5
    seed: int = 0
    pretrained_checkpoint: str | None = None
    min_frequency: int = 1

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        if self.layers < 1 or self.filters < 1 or self.max_seq_len < 1 or self.embedding_dim < 1:
            raise ConfigError("layers, filters, embedding_dim and max_seq_len must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0,1), got {self.dropout}")
        if self.topology == "cnn":
            if not self.conv_widths:
                raise ConfigError("cnn topology needs conv_widths")
            object.__setattr__(self, "conv_widths", tuple(int(w) for w in self.conv_widths))
            if len(self.conv_widths) != self.layers:
                raise ConfigError(
                    f"cnn expects one convolution width per layer: "
                    f"layers={self.layers}, widths={self.conv_widths}"
                )
            if min(self.conv_widths) < 1:
                raise ConfigError("convolution widths must be >= 1")
            if self.max_seq_len < max(self.conv_widths):
                raise ConfigError("max_seq_len must cover the widest convolution")
        if self.topology == "pretrained" and not self.pretrained_checkpoint:
            raise ConfigError("pretrained topology needs pretrained_checkpoint")

    @classmethod
    def from_string(cls, spec_string: str, **overrides) -> "ModelConfig":
        """Parse strings like ``cnn L3 F100 C3,4,5`` or ``lstm L2 F512``."""
        parts = spec_string.strip().split(None, 1)
        if not parts:
            raise ConfigError("empty architecture string")
        topology = parts[0].lower()
        fields: dict = {"topology": topology}
        for letter, value in _ARCH_RE.findall(parts[1] if len(parts) > 1 else ""):
            if letter == "L":
                fields["layers"] = int(value)
            elif letter == "F":
                fields["filters"] = int(value)
            else:
                fields["conv_widths"] = tuple(int(v) for v in value.split(",") if v)
        fields.update(overrides)
        return cls(**fields)

    def arch_label(self) -> str:
        if self.topology == "cnn":
            widths = ",".join(str(w) for w in self.conv_widths)
            return f"L{self.layers} F{self.filters} C{widths}"
        if self.topology in ("lstm", "rnn"):
            return f"L{self.layers} F{self.filters}"
        return self.pretrained_checkpoint or "pretrained"

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "layers": self.layers,
            "filters": self.filters,
            "conv_widths": list(self.conv_widths) if self.conv_widths else None,
            "embedding_dim": self.embedding_dim,
            "max_seq_len": self.max_seq_len,
            "dropout": self.dropout,
            "seed": self.seed,
            "pretrained_checkpoint": self.pretrained_checkpoint,
            "min_frequency": self.min_frequency,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = dict(data)
        widths = known.get("conv_widths")
        if widths is not None:
            known["conv_widths"] = tuple(widths)
        unknown = set(known) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown model config fields: {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True)
class TrainReport:
    """Per-epoch traces and provenance for one training run."""

    train_loss: tuple[float, ...]
    val_metric: tuple[float, ...]
    best_epoch: int | None
    epochs_run: int
    wall_clock_sec: float
    seed: int
    config_snapshot: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "train_loss": list(self.train_loss),
            "val_metric": list(self.val_metric),
            "best_epoch": self.best_epoch,
            "epochs_run": self.epochs_run,
            "wall_clock_sec": self.wall_clock_sec,
            "seed": self.seed,
            "config": self.config_snapshot,
        }


@dataclass
class Classifier:
    """Trained from-scratch model: immutable weights plus its vocabulary."""

    config: ModelConfig
    scheme: LabelScheme
    vocab: Vocabulary
    params: Params
    kind: str = "baseline"

    def _network(self):
        return build_network(self.config, len(self.vocab), self.scheme.num_classes)

    def predict(self, instances: Sequence[CitationInstance] | Corpus) -> tuple[np.ndarray, list[int]]:
        texts = [inst.text for inst in instances]
        if not texts:
            return np.zeros((0, self.scheme.num_classes)), []
        network = self._network()
        ids, lengths = encode_batch(texts, self.vocab, self.config.max_seq_len)
        probs = []
        for start in range(0, len(texts), 512):
            logits, _ = network.forward(
                self.params, ids[start : start + 512], lengths[start : start + 512], train=False
            )
            probs.append(softmax(logits))
        stacked = np.concatenate(probs, axis=0)
        return stacked, [int(row.argmax()) for row in stacked]

    def parameter_count(self) -> int:
        return parameter_count(self.params)


def build_network(config: ModelConfig, vocab_size: int, num_classes: int):
    if config.topology == "cnn":
        return TextCNN(
            vocab_size, num_classes, config.embedding_dim, config.filters,
            config.conv_widths, config.max_seq_len, config.dropout,
        )
    if config.topology == "lstm":
        return LSTMNet(vocab_size, num_classes, config.embedding_dim,
                       config.filters, config.layers, config.dropout)
    if config.topology == "rnn":
        return RNNNet(vocab_size, num_classes, config.embedding_dim,
                      config.filters, config.layers, config.dropout)
    raise ConfigError(f"no from-scratch network for topology {config.topology!r}")


def mean_embedding_features(embed: np.ndarray, ids: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Mean of the token embedding rows per instance (pad rows are zero)."""
    summed = embed[ids].sum(axis=1)
    return summed / lengths[:, None]


def _snapshot(params: Params) -> Params:
    return {k: v.copy() for k, v in params.items()}


def resolve_strategy(
    train_corpus: Corpus, loss: LossConfig, strategy: str, seed: int
) -> tuple[Corpus, LossConfig]:
    """Apply corpus-level strategies and fold loss-level ones into the config."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown sampling strategy {strategy!r}; expected one of {STRATEGIES}")
    if strategy == "upsample":
        return random_upsample(train_corpus, seed), loss
    if strategy == "downsample_balanced":
        return balance_downsample(train_corpus, seed), loss
    if strategy == "focal":
        return train_corpus, LossConfig("focal", gamma=loss.gamma, class_weights=loss.class_weights)
    if strategy == "class_weights":
        return train_corpus, LossConfig(
            "weighted_cross_entropy", gamma=loss.gamma,
            class_weights=class_weights_from(train_corpus),
        )
    return train_corpus, loss


def train(
    config: ModelConfig,
    train_corpus: Corpus,
    val_corpus: Corpus | None = None,
    loss: LossConfig | None = None,
    strategy: str = "none",
    epochs: int = 50,
    seed: int = 0,
    patience: int = 5,
    learning_rate: float = 0.01,
    batch_size: int = 32,
    smote_k: int = 5,
) -> tuple[Classifier, TrainReport]:
    """Train a from-scratch classifier (or dispatch to a pretrained backend).

    Early stopping watches validation macro-F1 with the given patience and
    restores the best epoch's weights. Without a validation corpus the
    model trains for the full epoch budget.
    """
    loss = loss or LossConfig()
    if val_corpus is not None and val_corpus.scheme != train_corpus.scheme:
        raise SchemeError("train and validation corpora use different schemes")
    if epochs < 0:
        raise ConfigError("epochs must be >= 0")

    if config.topology == "pretrained":
        from . import backends

        if strategy in ("focal", "smote", "class_weights"):
            raise ConfigError(
                f"strategy {strategy!r} is not supported for pretrained topologies; "
                "use none, upsample or downsample_balanced"
            )
        train_corpus, _ = resolve_strategy(train_corpus, loss, strategy, seed)
        return backends.fine_tune_with_report(
            config.pretrained_checkpoint,
            train_corpus,
            val_corpus,
            hyperparams={"epochs": epochs, "patience": patience,
                         "learning_rate": learning_rate, "batch_size": batch_size},
            seed=seed,
        )

    scheme = train_corpus.scheme
    if len(train_corpus) == 0:
        raise ValueError("cannot train on an empty corpus")
    if strategy != "smote":
        train_corpus, loss = resolve_strategy(train_corpus, loss, strategy, seed)

    started = time.perf_counter()
    vocab = build_vocab(train_corpus, config.min_frequency)
    network = build_network(config, len(vocab), scheme.num_classes)
    params = network.init_params(np.random.Generator(np.random.PCG64(config.seed)))

    texts = [inst.text for inst in train_corpus]
    labels = np.asarray([inst.label for inst in train_corpus], dtype=np.int64)
    ids, lengths = encode_batch(texts, vocab, config.max_seq_len)

    synth_emb = synth_lengths = synth_labels = None
    if strategy == "smote":
        feats = mean_embedding_features(params["embed"], ids, lengths)
        targets = balance_smote_targets(labels, scheme.num_classes)
        synth_x, synth_labels = smote(feats, labels, smote_k, targets, seed)
        if len(synth_x):
            # synthetics bypass the embedding layer as single-step sequences,
            # zero-padded so every convolution width stays applicable
            t_syn = max(config.conv_widths) if config.topology == "cnn" else 1
            synth_emb = np.zeros((len(synth_x), t_syn, config.embedding_dim))
            synth_emb[:, 0, :] = synth_x
            synth_lengths = np.ones(len(synth_x), dtype=np.int64)

    n_real = len(texts)
    n_synth = 0 if synth_emb is None else len(synth_emb)
    n_total = n_real + n_synth

    rng = np.random.Generator(np.random.PCG64(seed))
    optimizer = Adam(params, lr=learning_rate)
    train_trace: list[float] = []
    val_trace: list[float] = []
    best_params: Params | None = None
    best_metric = -np.inf
    best_epoch: int | None = None
    stale = 0

    for epoch in range(epochs):
        order = rng.permutation(n_total)
        loss_sum = 0.0
        for start in range(0, n_total, batch_size):
            chunk = order[start : start + batch_size]
            real_part = chunk[chunk < n_real]
            synth_part = chunk[chunk >= n_real] - n_real
            n_batch = len(chunk)
            grads_total: Params = {}
            batch_loss = 0.0
            for part, embedded in ((real_part, False), (synth_part, True)):
                if len(part) == 0:
                    continue
                if embedded:
                    logits, cache = network.forward(
                        params, None, synth_lengths[part],
                        embedded=synth_emb[part], train=True, rng=rng,
                    )
                    part_labels = synth_labels[part]
                else:
                    logits, cache = network.forward(
                        params, ids[part], lengths[part], train=True, rng=rng
                    )
                    part_labels = labels[part]
                part_loss, dlogits = loss_and_grad(logits, part_labels, loss)
                if not np.isfinite(part_loss):
                    raise TrainingDivergedError(
                        f"non-finite loss {part_loss} at epoch {epoch}, batch offset {start}"
                    )
                share = len(part) / n_batch
                batch_loss += share * part_loss
                for key, grad in network.backward(params, cache, dlogits * share).items():
                    if key in grads_total:
                        grads_total[key] += grad
                    else:
                        grads_total[key] = grad
            optimizer.step(params, grads_total)
            loss_sum += batch_loss * n_batch
        epoch_loss = loss_sum / n_total
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(f"non-finite mean loss at epoch {epoch}")
        train_trace.append(epoch_loss)

        if val_corpus is not None:
            probe = Classifier(config, scheme, vocab, params)
            _, predicted = probe.predict(val_corpus)
            gold = [inst.label for inst in val_corpus]
            metric = EvaluationReport.from_predictions(gold, predicted, scheme).macro_f1
            val_trace.append(metric)
            if metric > best_metric:
                best_metric = metric
                best_params = _snapshot(params)
                best_epoch = epoch
                stale = 0
            else:
                stale += 1
                if stale >= patience:
                    break
        else:
            best_epoch = epoch

    if best_params is not None:
        params = best_params

    classifier = Classifier(config, scheme, vocab, params)
    report = TrainReport(
        train_loss=tuple(train_trace),
        val_metric=tuple(val_trace),
        best_epoch=best_epoch,
        epochs_run=len(train_trace),
        wall_clock_sec=time.perf_counter() - started,
        seed=seed,
        config_snapshot={"model": config.to_dict(), "loss": {
            "kind": loss.kind, "gamma": loss.gamma,
            "class_weights": list(loss.class_weights) if loss.class_weights else None,
        }, "strategy": strategy, "epochs": epochs, "patience": patience,
            "learning_rate": learning_rate, "batch_size": batch_size},
    )
    return classifier, report


def predict(classifier, instances: Sequence[CitationInstance] | Corpus) -> tuple[np.ndarray, list[int]]:
    """Probability rows (on the simplex) and argmax labels, lower index on ties."""
    return classifier.predict(instances)
