"""Deterministic, seeded dataset partitioning.

Covers the fixed-ratio train/test split, stratified k-fold assignment, and
per-fold minority-class downsampling. All randomness flows through
``numpy.random.Generator(PCG64(seed))``; the algorithm name is recorded in
run manifests so assignments can be replayed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import StratificationError

#: PRNG identifier recorded in run manifests.
PRNG_ALGORITHM = "numpy.random.PCG64"


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SplitPlan:
    """Declarative description of a partitioning protocol."""

    kind: str  # "fixed_ratio" | "kfold" | "provided"
    ratio: float | None = None
    k: int | None = None
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.kind == "fixed_ratio":
            if self.ratio is None or not 0.0 < self.ratio < 1.0:
                raise ValueError(f"fixed_ratio plan needs ratio in (0,1), got {self.ratio}")
        elif self.kind == "kfold":
            if self.k is None or self.k < 2:
                raise ValueError(f"kfold plan needs k >= 2, got {self.k}")
        elif self.kind != "provided":
            raise ValueError(f"unknown split kind {self.kind!r}")


@dataclass(frozen=True)
class FoldAssignment:
    """One cross-validation experiment: fold ``index`` is the test set."""

    index: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def train_corpus(self, corpus: Corpus) -> Corpus:
        wanted = set(self.train_ids)
        idx = [i for i, inst in enumerate(corpus) if inst.id in wanted]
        return corpus.select(idx, name=f"{corpus.name}-fold{self.index}-train")

    def test_corpus(self, corpus: Corpus) -> Corpus:
        wanted = set(self.test_ids)
        idx = [i for i, inst in enumerate(corpus) if inst.id in wanted]
        return corpus.select(idx, name=f"{corpus.name}-fold{self.index}-test")


def largest_remainder_allocation(counts: tuple[int, ...], ratio: float) -> list[int]:
    """Per-class train sizes whose sum is round(ratio * total).

    Fractional seats go to the largest remainders; ties break toward the
    lower class index so the allocation is order-independent.
    """
    total_train = int(round(ratio * sum(counts)))
    exact = [ratio * c for c in counts]
    base = [math.floor(e) for e in exact]
    leftover = total_train - sum(base)
    order = sorted(range(len(counts)), key=lambda i: (-(exact[i] - base[i]), i))
    j = 0
    while leftover > 0:
        i = order[j % len(order)]
        if base[i] < counts[i]:
            base[i] += 1
            leftover -= 1
        j += 1
    while leftover < 0:  # only when round() undershoots every floor; defensive
        i = order[-1 - (j % len(order))]
        if base[i] > 0:
            base[i] -= 1
            leftover += 1
        j += 1
    return base


def fixed_split(
    corpus: Corpus,
    ratio: float,
    seed: int,
    stratified: bool = True,
) -> tuple[Corpus, Corpus]:
    """Seeded train/test split; both halves preserve original corpus order."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0,1), got {ratio}")
    if len(corpus) == 0:
        raise ValueError("cannot split an empty corpus")
    rng = rng_for(seed)

    if stratified:
        counts = corpus.class_counts()
        for label, count in zip(corpus.scheme.labels, counts):
            if count == 0:
                raise StratificationError(
                    f"class {label!r} has no instances; stratified split is undefined"
                )
        per_class_train = largest_remainder_allocation(counts, ratio)
        train_idx: list[int] = []
        # RNG draws are consumed in scheme order, one permutation per class.
        by_class: list[list[int]] = [[] for _ in counts]
        for i, inst in enumerate(corpus):
            by_class[inst.label].append(i)
        for c, indices in enumerate(by_class):
            shuffled = rng.permutation(len(indices))
            train_idx.extend(indices[j] for j in shuffled[: per_class_train[c]])
    else:
        n_train = int(round(ratio * len(corpus)))
        shuffled = rng.permutation(len(corpus))
        train_idx = list(shuffled[:n_train])

    train_set = set(train_idx)
    train = corpus.select(sorted(train_set), name=f"{corpus.name}-train")
    test = corpus.select(
        [i for i in range(len(corpus)) if i not in train_set], name=f"{corpus.name}-test"
    )
    return train, test


def kfold(corpus: Corpus, k: int, seed: int) -> list[FoldAssignment]:
    """Stratified k-fold partition; fold i is experiment i's test set.

    Per class, fold sizes differ by at most one (round-robin dealing of a
    seeded shuffle). Every class must have at least k instances.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    counts = corpus.class_counts()
    for label, count in zip(corpus.scheme.labels, counts):
        if count < k:
            raise StratificationError(
                f"class {label!r} has {count} instance(s); cannot stratify into {k} folds"
            )
    rng = rng_for(seed)
    fold_of = np.empty(len(corpus), dtype=np.int64)
    by_class: list[list[int]] = [[] for _ in counts]
    for i, inst in enumerate(corpus):
        by_class[inst.label].append(i)
    for indices in by_class:
        shuffled = rng.permutation(len(indices))
        for j, pos in enumerate(shuffled):
            fold_of[indices[pos]] = j % k

    assignments: list[FoldAssignment] = []
    ids = [inst.id for inst in corpus]
    for fold in range(k):
        test_ids = tuple(ids[i] for i in range(len(ids)) if fold_of[i] == fold)
        train_ids = tuple(ids[i] for i in range(len(ids)) if fold_of[i] != fold)
        assignments.append(FoldAssignment(fold, train_ids, test_ids))
    return assignments


def balance_downsample(train: Corpus, seed: int) -> Corpus:
    """Downsample every class to the minority-class count.

    Kept instances are chosen uniformly at random under the seed; the
    output preserves original corpus order. Already-balanced input is a
    no-op (identical corpus).
    """
    if len(train) == 0:
        raise ValueError("cannot downsample an empty corpus")
    counts = train.class_counts()
    present = [c for c in counts if c > 0]
    minority = min(present)
    if all(c in (0, minority) for c in counts):
        return train
    rng = rng_for(seed)
    keep: set[int] = set()
    by_class: list[list[int]] = [[] for _ in counts]
    for i, inst in enumerate(train):
        by_class[inst.label].append(i)
    for indices in by_class:
        if len(indices) <= minority:
            keep.update(indices)
        else:
            chosen = rng.choice(len(indices), size=minority, replace=False)
            keep.update(indices[j] for j in chosen)
    return train.select(sorted(keep), name=f"{train.name}-balanced")


def export_fixed_csv(train: Corpus, test: Corpus, path: str | Path) -> None:
    """Write instance id -> train/test tags so external tools can replay the split."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "tag"])
        for inst in train:
            writer.writerow([inst.id, "train"])
        for inst in test:
            writer.writerow([inst.id, "test"])


def export_kfold_csv(assignments: list[FoldAssignment], path: str | Path) -> None:
    """Write instance id -> fold index (the fold in which the id is tested)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "fold"])
        for assignment in assignments:
            for inst_id in assignment.test_ids:
                writer.writerow([inst_id, assignment.index])
