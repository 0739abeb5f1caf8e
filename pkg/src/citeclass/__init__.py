"""citeclass: citation intent and sentiment classification toolkit."""

__version__ = "0.1.0"

from .balance import LossConfig, class_weights_from, focal_loss, random_upsample, smote
from .cleanse import CleanseResult, cleanse, dedupe_consistent, find_duplicate_groups, normalize_text, remove_conflicting
from .corpus import (
    INTENT_SCHEME,
    SENTIMENT_SCHEME,
    CitationInstance,
    Corpus,
    DistributionStats,
    LabelScheme,
    LengthStats,
    class_distribution,
    export_corpus,
    length_stats,
    load_csc,
    load_scicite,
    read_corpus,
)
from .metrics import (
    ConfusionMatrix,
    CVAggregate,
    EvaluationReport,
    aggregate_cv,
    confusion,
    macro_f1,
    micro_f1,
    per_class_accuracy,
)
from .splits import FoldAssignment, SplitPlan, balance_downsample, fixed_split, kfold
from .text import tokenize

__all__ = [
    "CVAggregate",
    "CitationInstance",
    "CleanseResult",
    "ConfusionMatrix",
    "Corpus",
    "DistributionStats",
    "EvaluationReport",
    "FoldAssignment",
    "INTENT_SCHEME",
    "LabelScheme",
    "LengthStats",
    "LossConfig",
    "SENTIMENT_SCHEME",
    "SplitPlan",
    "aggregate_cv",
    "balance_downsample",
    "class_distribution",
    "class_weights_from",
    "cleanse",
    "confusion",
    "dedupe_consistent",
    "export_corpus",
    "find_duplicate_groups",
    "fixed_split",
    "focal_loss",
    "kfold",
    "length_stats",
    "load_csc",
    "load_scicite",
    "macro_f1",
    "micro_f1",
    "normalize_text",
    "per_class_accuracy",
    "random_upsample",
    "read_corpus",
    "remove_conflicting",
    "smote",
    "tokenize",
]
