"""Two-step corpus cleansing: drop label-conflicting duplicates, then dedupe.

Step 1 removes every appearance of a text that occurs with two or more
distinct labels (keeping any of them would be an arbitrary adjudication).
Step 2 keeps the first occurrence of each remaining duplicate text and
drops the rest. Membership is the only thing that changes; texts are
never rewritten.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

from .corpus import CitationInstance, Corpus
from .errors import DataFormatError

_WS_RUN = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Duplicate-detection key: NFC-normalized, whitespace-collapsed, stripped.

    Case and punctuation are preserved; the key is deliberately conservative
    so only effectively identical texts collapse together.
    """
    return _WS_RUN.sub(" ", unicodedata.normalize("NFC", text)).strip()


def find_duplicate_groups(corpus: Corpus) -> dict[str, list[CitationInstance]]:
    """Map normalized text -> instances, for texts occurring two or more times."""
    groups: dict[str, list[CitationInstance]] = {}
    for inst in corpus:
        groups.setdefault(normalize_text(inst.text), []).append(inst)
    return {key: members for key, members in groups.items() if len(members) >= 2}


def remove_conflicting(corpus: Corpus) -> tuple[Corpus, list[CitationInstance]]:
    """Remove every member of duplicate groups that carry >= 2 distinct labels."""
    conflicted: set[str] = set()
    for key, members in find_duplicate_groups(corpus).items():
        if len({m.label for m in members}) >= 2:
            conflicted.add(key)
    retained: list[CitationInstance] = []
    removed: list[CitationInstance] = []
    for inst in corpus:
        (removed if normalize_text(inst.text) in conflicted else retained).append(inst)
    return corpus.replaced(retained), removed


def dedupe_consistent(corpus: Corpus) -> tuple[Corpus, list[CitationInstance]]:
    """Within each same-label duplicate group, keep the first occurrence.

    Requires a conflict-free corpus; raises if a mixed-label group is found.
    """
    for key, members in find_duplicate_groups(corpus).items():
        if len({m.label for m in members}) >= 2:
            raise DataFormatError(
                f"conflicting duplicate group still present (text key {key[:60]!r}); "
                "run remove_conflicting first"
            )
    seen: set[str] = set()
    retained: list[CitationInstance] = []
    removed: list[CitationInstance] = []
    for inst in corpus:
        key = normalize_text(inst.text)
        if key in seen:
            removed.append(inst)
        else:
            seen.add(key)
            retained.append(inst)
    return corpus.replaced(retained), removed


@dataclass(frozen=True)
class CleanseLedgerRow:
    label: str
    input_count: int
    removed_conflicting: int
    removed_duplicate: int
    retained: int


@dataclass(frozen=True)
class CleanseResult:
    """Retained corpus plus the per-class removal ledger."""

    retained: Corpus
    removed_conflicting: tuple[CitationInstance, ...]
    removed_duplicate: tuple[CitationInstance, ...]
    ledger: tuple[CleanseLedgerRow, ...]

    def ledger_rows(self) -> list[dict]:
        return [
            {
                "class": row.label,
                "input": row.input_count,
                "removed_conflicting": row.removed_conflicting,
                "removed_duplicate": row.removed_duplicate,
                "retained": row.retained,
            }
            for row in self.ledger
        ]

    def report_text(self) -> str:
        """Human-readable cleansing summary."""
        lines = [f"cleansing report for corpus {self.retained.name!r}"]
        header = f"{'class':<14}{'input':>8}{'conflict':>10}{'duplicate':>11}{'retained':>10}"
        lines.append(header)
        for row in self.ledger:
            lines.append(
                f"{row.label:<14}{row.input_count:>8}{row.removed_conflicting:>10}"
                f"{row.removed_duplicate:>11}{row.retained:>10}"
            )
        total_removed = len(self.removed_conflicting) + len(self.removed_duplicate)
        lines.append(
            f"total removed: {total_removed} "
            f"({len(self.removed_conflicting)} conflicting, {len(self.removed_duplicate)} duplicate)"
        )
        return "\n".join(lines)


def cleanse(corpus: Corpus, name: str | None = None) -> CleanseResult:
    """Run both cleansing steps and assemble the per-class ledger.

    Removed conflicting instances are attributed to their own label, since
    the ledger is reported per class.
    """
    no_conflicts, removed_conflicting = remove_conflicting(corpus)
    retained, removed_duplicate = dedupe_consistent(no_conflicts)
    if name:
        retained = retained.replaced(retained.instances, name)

    scheme = corpus.scheme
    input_counts = corpus.class_counts()
    conflict_counts = [0] * scheme.num_classes
    for inst in removed_conflicting:
        conflict_counts[inst.label] += 1
    duplicate_counts = [0] * scheme.num_classes
    for inst in removed_duplicate:
        duplicate_counts[inst.label] += 1
    retained_counts = retained.class_counts()

    ledger = tuple(
        CleanseLedgerRow(
            label=scheme.labels[i],
            input_count=input_counts[i],
            removed_conflicting=conflict_counts[i],
            removed_duplicate=duplicate_counts[i],
            retained=retained_counts[i],
        )
        for i in range(scheme.num_classes)
    )
    return CleanseResult(retained, tuple(removed_conflicting), tuple(removed_duplicate), ledger)
