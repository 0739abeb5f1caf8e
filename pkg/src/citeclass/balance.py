"""Class-imbalance strategies: focal loss, SMOTE, random upsampling, class weights.

The loss and weight functions are pure numpy arithmetic over probability
vectors; SMOTE operates on any continuous feature matrix (for text, the
trainer supplies mean token-embedding features).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import CitationInstance, Corpus

#: Floor applied inside log terms so a confident wrong prediction cannot
#: produce an infinite loss.
PROB_FLOOR = 1e-12

SIMPLEX_TOL = 1e-6

LOSS_KINDS = ("cross_entropy", "focal", "weighted_cross_entropy")


@dataclass(frozen=True)
class LossConfig:
    """Training-loss selection; gamma only matters for the focal kind."""

    kind: str = "cross_entropy"
    gamma: float = 2.0
    class_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.class_weights is not None:
            object.__setattr__(self, "class_weights", tuple(float(w) for w in self.class_weights))
            if any(w <= 0 for w in self.class_weights):
                raise ValueError(f"class weights must be positive, got {self.class_weights}")


def _check_simplex(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ValueError(f"expected a 2-D array of probability rows, got shape {probs.shape}")
    if probs.shape[0] == 0:
        raise ValueError("empty batch")
    if np.any(probs < -SIMPLEX_TOL):
        raise ValueError("probability entries must be non-negative")
    sums = probs.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > SIMPLEX_TOL)[0]
    if bad.size:
        raise ValueError(
            f"probability rows must sum to 1 (row {bad[0]} sums to {sums[bad[0]]:.8f})"
        )
    return probs


def focal_loss(
    probs: np.ndarray,
    labels: Sequence[int] | np.ndarray,
    gamma: float = 2.0,
    class_weights: Sequence[float] | None = None,
) -> float:
    """Mean of ``-w_y * (1 - p_y)^gamma * log(p_y)`` over the batch.

    At gamma = 0 with unit weights this is exactly the mean cross-entropy.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    probs = _check_simplex(probs)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (probs.shape[0],):
        raise ValueError("labels must align with probability rows")
    if np.any((labels < 0) | (labels >= probs.shape[1])):
        raise ValueError("label index outside the probability columns")
    p_y = np.maximum(probs[np.arange(len(labels)), labels], PROB_FLOOR)
    if class_weights is None:
        w = np.ones(len(labels))
    else:
        weights = np.asarray(class_weights, dtype=np.float64)
        if weights.shape != (probs.shape[1],):
            raise ValueError("class_weights must have one entry per class")
        w = weights[labels]
    terms = -w * np.power(1.0 - p_y, gamma) * np.log(p_y)
    return float(terms.mean())


def as_feature_matrix(features: np.ndarray) -> np.ndarray:
    """Validate a per-instance feature matrix: 2-D, finite, float."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {features.shape}")
    if not np.all(np.isfinite(features)):
        raise ValueError("feature matrix contains non-finite values")
    return features


def nearest_same_class_neighbors(features: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest neighbors (Euclidean) for each row, self excluded.

    Ties break toward the lower index so results are seed-independent.
    """
    n = features.shape[0]
    if k >= n:
        raise ValueError(f"k={k} needs at least k+1 points, got {n}")
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):  # row-wise to keep memory at O(n*d)
        diff = features - features[i]
        dist2 = np.einsum("ij,ij->i", diff, diff)
        dist2[i] = np.inf
        order = np.argsort(dist2, kind="stable")  # stable sort => lower index wins ties
        out[i] = order[:k]
    return out


def smote(
    features: np.ndarray,
    labels: Sequence[int] | np.ndarray,
    k_neighbors: int,
    targets: Mapping[int, int] | Sequence[int],
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Synthesize minority points by interpolating toward same-class neighbors.

    Each synthetic point is ``x_i + lam * (x_nn - x_i)`` with ``lam``
    uniform on [0, 1] and ``x_nn`` one of the k nearest same-class
    neighbors of a randomly chosen base point. Returns only the synthetic
    rows; appending them to the input brings class counts up to the targets.
    """
    features = as_feature_matrix(features)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (features.shape[0],):
        raise ValueError("labels must align with feature rows")
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1")

    if isinstance(targets, Mapping):
        target_of = dict(targets)
    else:
        target_of = {c: int(t) for c, t in enumerate(targets)}

    rng = np.random.Generator(np.random.PCG64(seed))
    synth_rows: list[np.ndarray] = []
    synth_labels: list[int] = []
    for cls in sorted(target_of):
        idx = np.nonzero(labels == cls)[0]
        count = len(idx)
        target = target_of[cls]
        if target < count:
            raise ValueError(f"target {target} for class {cls} is below current count {count}")
        need = target - count
        if need == 0:
            continue
        if count < k_neighbors + 1:
            raise ValueError(
                f"class {cls} has {count} point(s); SMOTE with k={k_neighbors} needs at least "
                f"{k_neighbors + 1}. Use k <= {max(count - 1, 1)}."
            )
        class_feats = features[idx]
        neighbors = nearest_same_class_neighbors(class_feats, k_neighbors)
        base = rng.integers(0, count, size=need)
        pick = rng.integers(0, k_neighbors, size=need)
        lam = rng.uniform(0.0, 1.0, size=need)
        x_i = class_feats[base]
        x_nn = class_feats[neighbors[base, pick]]
        synth_rows.append(x_i + lam[:, None] * (x_nn - x_i))
        synth_labels.extend([cls] * need)

    if not synth_rows:
        return np.empty((0, features.shape[1])), np.empty((0,), dtype=np.int64)
    return np.concatenate(synth_rows, axis=0), np.asarray(synth_labels, dtype=np.int64)


def balance_smote_targets(labels: Sequence[int] | np.ndarray, num_classes: int) -> dict[int, int]:
    """SMOTE targets that raise every present class to the majority count."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=num_classes)
    majority = int(counts.max())
    return {c: majority for c in range(num_classes) if counts[c] > 0}


def random_upsample(corpus: Corpus, seed: int) -> Corpus:
    """Duplicate minority instances (with replacement) up to the majority count.

    Duplicates get fresh ids and provenance meta; the original instances are
    kept untouched and in order, with duplicates appended after them.
    """
    if len(corpus) == 0:
        raise ValueError("cannot upsample an empty corpus")
    counts = corpus.class_counts()
    majority = max(counts)
    if all(c in (0, majority) for c in counts):
        return corpus
    rng = np.random.Generator(np.random.PCG64(seed))
    by_class: list[list[CitationInstance]] = [[] for _ in counts]
    for inst in corpus:
        by_class[inst.label].append(inst)

    extras: list[CitationInstance] = []
    for cls, members in enumerate(by_class):
        need = majority - len(members)
        if need <= 0 or not members:
            continue
        draws = rng.integers(0, len(members), size=need)
        for n, j in enumerate(draws):
            src = members[j]
            extras.append(
                CitationInstance(
                    id=f"{src.id}#up{n}",
                    text=src.text,
                    label=src.label,
                    meta={**dict(src.meta), "upsampled_from": src.id},
                )
            )
    return corpus.replaced(list(corpus.instances) + extras, name=f"{corpus.name}-upsampled")


def class_weights_from(train: Corpus) -> tuple[float, ...]:
    """Inverse-frequency weights, mean-normalized: ``N / (num_classes * count_c)``."""
    counts = train.class_counts()
    for label, count in zip(train.scheme.labels, counts):
        if count == 0:
            raise ValueError(f"class {label!r} is empty; weights undefined")
    total = len(train)
    k = train.scheme.num_classes
    return tuple(total / (k * c) for c in counts)
