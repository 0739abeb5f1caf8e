"""Confusion-matrix arithmetic: per-class accuracy, micro-F1, macro-F1.

All counts are integers and every derived metric is one exact float
division away from them, so results are reproducible bit-for-bit. In the
single-label setting micro-F1 equals trace/total exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import LabelScheme
from .errors import SchemeError


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[true_class][predicted_class] over one label scheme."""

    scheme: LabelScheme
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        k = self.scheme.num_classes
        if counts.shape != (k, k):
            raise ValueError(f"confusion matrix must be {k}x{k}, got {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def row(self, c: int) -> np.ndarray:
        return self.counts[c]

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.scheme != self.scheme:
            raise SchemeError("cannot add confusion matrices over different schemes")
        return ConfusionMatrix(self.scheme, self.counts + other.counts)


def confusion(
    gold: Sequence[int],
    pred: Sequence[int],
    scheme: LabelScheme,
) -> ConfusionMatrix:
    gold = np.asarray(gold, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if gold.shape != pred.shape or gold.ndim != 1:
        raise ValueError(f"gold and pred must be equal-length 1-D sequences, got {gold.shape} vs {pred.shape}")
    if gold.size == 0:
        raise ValueError("cannot build a confusion matrix from zero pairs")
    k = scheme.num_classes
    if np.any((gold < 0) | (gold >= k)) or np.any((pred < 0) | (pred >= k)):
        raise SchemeError(f"label outside scheme {scheme.labels}")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (gold, pred), 1)
    return ConfusionMatrix(scheme, counts)


def per_class_accuracy(matrix: ConfusionMatrix) -> tuple[float | None, ...]:
    """Diagonal over row sum (class recall); absent, not zero, for empty rows."""
    out: list[float | None] = []
    for c in range(matrix.scheme.num_classes):
        support = int(matrix.counts[c].sum())
        out.append(None if support == 0 else int(matrix.counts[c, c]) / support)
    return tuple(out)


def _class_tp_fp_fn(matrix: ConfusionMatrix, c: int) -> tuple[int, int, int]:
    tp = int(matrix.counts[c, c])
    fp = int(matrix.counts[:, c].sum()) - tp
    fn = int(matrix.counts[c].sum()) - tp
    return tp, fp, fn


def per_class_prf(matrix: ConfusionMatrix) -> list[dict]:
    """Precision/recall/F1 per class; zero-support classes score 0 with a warning."""
    rows = []
    for c, name in enumerate(matrix.scheme.labels):
        tp, fp, fn = _class_tp_fp_fn(matrix, c)
        if tp + fn == 0:
            warnings.warn(
                f"class {name!r} has zero support; its F1 contributes 0 to the macro average",
                stacklevel=2,
            )
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
        rows.append({"class": name, "precision": precision, "recall": recall, "f1": f1, "support": tp + fn})
    return rows


def micro_f1(matrix: ConfusionMatrix) -> float:
    """F1 from pooled TP/FP/FN; integer arithmetic up to the final division."""
    tp = fp = fn = 0
    for c in range(matrix.scheme.num_classes):
        ctp, cfp, cfn = _class_tp_fp_fn(matrix, c)
        tp, fp, fn = tp + ctp, fp + cfp, fn + cfn
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def macro_f1(matrix: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1 scores."""
    rows = per_class_prf(matrix)
    return sum(row["f1"] for row in rows) / len(rows)


@dataclass(frozen=True)
class EvaluationReport:
    """Everything a results table row needs, at full precision."""

    scheme: LabelScheme
    matrix: ConfusionMatrix
    per_class_accuracy: tuple[float | None, ...]
    per_class: tuple[dict, ...]
    micro_f1: float
    macro_f1: float
    n_instances: int
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_matrix(cls, matrix: ConfusionMatrix, **extra) -> "EvaluationReport":
        return cls(
            scheme=matrix.scheme,
            matrix=matrix,
            per_class_accuracy=per_class_accuracy(matrix),
            per_class=tuple(per_class_prf(matrix)),
            micro_f1=micro_f1(matrix),
            macro_f1=macro_f1(matrix),
            n_instances=matrix.total,
            extra=dict(extra),
        )

    @classmethod
    def from_predictions(
        cls, gold: Sequence[int], pred: Sequence[int], scheme: LabelScheme, **extra
    ) -> "EvaluationReport":
        return cls.from_matrix(confusion(gold, pred, scheme), **extra)

    def to_dict(self) -> dict:
        return {
            "task": self.scheme.task,
            "labels": list(self.scheme.labels),
            "n_instances": self.n_instances,
            "confusion": self.matrix.counts.tolist(),
            "per_class_accuracy": list(self.per_class_accuracy),
            "per_class": [dict(row) for row in self.per_class],
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            **({"extra": self.extra} if self.extra else {}),
        }


def _mean_or_none(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return sum(present) / len(present) if present else None


@dataclass(frozen=True)
class CVAggregate:
    """Cross-validation summary carrying both aggregation conventions.

    ``averaged`` holds the unweighted mean of each scalar metric across
    folds; ``pooled`` recomputes every metric from the elementwise sum of
    the fold confusion matrices. Fold sizes can differ by one, so the two
    views are not interchangeable.
    """

    fold_reports: tuple[EvaluationReport, ...]
    averaged: EvaluationReport
    pooled: EvaluationReport

    def to_dict(self) -> dict:
        return {
            "folds": [r.to_dict() for r in self.fold_reports],
            "averaged": self.averaged.to_dict(),
            "pooled": self.pooled.to_dict(),
        }


def aggregate_cv(reports: Sequence[EvaluationReport]) -> CVAggregate:
    """Combine per-fold reports; see :class:`CVAggregate` for the two views."""
    if not reports:
        raise ValueError("need at least one fold report")
    scheme = reports[0].scheme
    for r in reports[1:]:
        if r.scheme != scheme:
            raise SchemeError("fold reports use different label schemes")

    summed = reports[0].matrix
    for r in reports[1:]:
        summed = summed + r.matrix
    pooled = EvaluationReport.from_matrix(summed)

    n_folds = len(reports)
    avg_acc = tuple(
        _mean_or_none([r.per_class_accuracy[c] for r in reports])
        for c in range(scheme.num_classes)
    )
    avg_rows = []
    for c, name in enumerate(scheme.labels):
        avg_rows.append(
            {
                "class": name,
                "precision": sum(r.per_class[c]["precision"] for r in reports) / n_folds,
                "recall": sum(r.per_class[c]["recall"] for r in reports) / n_folds,
                "f1": sum(r.per_class[c]["f1"] for r in reports) / n_folds,
                "support": sum(r.per_class[c]["support"] for r in reports),
            }
        )
    averaged = EvaluationReport(
        scheme=scheme,
        matrix=summed,
        per_class_accuracy=avg_acc,
        per_class=tuple(avg_rows),
        micro_f1=sum(r.micro_f1 for r in reports) / n_folds,
        macro_f1=sum(r.macro_f1 for r in reports) / n_folds,
        n_instances=sum(r.n_instances for r in reports),
        extra={"aggregation": "fold_mean", "n_folds": n_folds},
    )
    return CVAggregate(tuple(reports), averaged, pooled)
