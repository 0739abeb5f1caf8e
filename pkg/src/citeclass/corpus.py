"""Corpus data model and ingestion for the citation intent and sentiment datasets.

A :class:`Corpus` is an immutable, ordered collection of labeled citation
contexts bound to a :class:`LabelScheme`. Loaders exist for the SciCite
record-per-line intent files, the tab-delimited raw sentiment corpus, and
the toolkit's own canonical export format (which round-trips exactly).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping

from .errors import DataFormatError, SchemeError
from .text import tokenize

logger = logging.getLogger(__name__)

EXPORT_FORMAT = "citeclass-corpus"
EXPORT_VERSION = 1

#: Raw sentiment-corpus code -> label name.
SENTIMENT_CODE_MAP = {"p": "positive", "n": "negative", "o": "neutral"}


@dataclass(frozen=True)
class LabelScheme:
    """Ordered label set for one classification task.

    The label order is fixed and reproducible; report columns follow it.
    """

    task: str
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise SchemeError("label scheme needs at least one label")
        if any(not name for name in self.labels):
            raise SchemeError("label names must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise SchemeError(f"duplicate label names in scheme: {self.labels}")

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def index_of(self, name: str) -> int:
        try:
            return self.labels.index(name)
        except ValueError:
            raise SchemeError(
                f"unknown label {name!r} for task {self.task!r}; expected one of {self.labels}"
            ) from None

    def name_of(self, index: int) -> str:
        if not 0 <= index < len(self.labels):
            raise SchemeError(f"label index {index} out of range for {self.labels}")
        return self.labels[index]


INTENT_SCHEME = LabelScheme("intent", ("result", "method", "background"))
SENTIMENT_SCHEME = LabelScheme("sentiment", ("positive", "negative", "neutral"))


def scheme_for_task(task: str) -> LabelScheme:
    if task == "intent":
        return INTENT_SCHEME
    if task == "sentiment":
        return SENTIMENT_SCHEME
    raise SchemeError(f"unknown task {task!r}; expected 'intent' or 'sentiment'")


@dataclass(frozen=True)
class CitationInstance:
    """One labeled citation context."""

    id: str
    text: str
    label: int
    meta: Mapping[str, str] = field(default_factory=dict)

    def with_meta(self, **extra: str) -> "CitationInstance":
        merged = dict(self.meta)
        merged.update(extra)
        return CitationInstance(self.id, self.text, self.label, merged)


@dataclass(frozen=True)
class Corpus:
    """Immutable ordered collection of instances under one label scheme.

    Iteration order equals construction order, so downstream seeded
    operations are deterministic.
    """

    scheme: LabelScheme
    instances: tuple[CitationInstance, ...]
    name: str = "corpus"

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        seen: set[str] = set()
        for inst in self.instances:
            if not inst.text.strip():
                raise DataFormatError(f"instance {inst.id!r} has empty text")
            if not 0 <= inst.label < self.scheme.num_classes:
                raise SchemeError(
                    f"instance {inst.id!r} label index {inst.label} outside scheme "
                    f"{self.scheme.labels}"
                )
            if inst.id in seen:
                raise DataFormatError(f"duplicate instance id {inst.id!r} in corpus {self.name!r}")
            seen.add(inst.id)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[CitationInstance]:
        return iter(self.instances)

    def __getitem__(self, i: int) -> CitationInstance:
        return self.instances[i]

    def class_counts(self) -> tuple[int, ...]:
        counts = [0] * self.scheme.num_classes
        for inst in self.instances:
            counts[inst.label] += 1
        return tuple(counts)

    def label_names(self) -> list[str]:
        return [self.scheme.name_of(inst.label) for inst in self.instances]

    def select(self, indices: Iterable[int], name: str | None = None) -> "Corpus":
        """Sub-corpus of the given positions, in the given order."""
        picked = tuple(self.instances[i] for i in indices)
        return Corpus(self.scheme, picked, name or self.name)

    def replaced(self, instances: Iterable[CitationInstance], name: str | None = None) -> "Corpus":
        return Corpus(self.scheme, tuple(instances), name or self.name)


def concat(corpora: Iterable[Corpus], name: str = "combined") -> Corpus:
    """Concatenate corpora sharing one scheme; instance ids must stay unique."""
    corpora = list(corpora)
    if not corpora:
        raise DataFormatError("cannot concatenate zero corpora")
    scheme = corpora[0].scheme
    for c in corpora[1:]:
        if c.scheme != scheme:
            raise SchemeError(f"scheme mismatch: {c.scheme.task} vs {scheme.task}")
    instances: list[CitationInstance] = []
    for c in corpora:
        instances.extend(c.instances)
    return Corpus(scheme, tuple(instances), name)


# ---------------------------------------------------------------------------
# Loaders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoaderConfig:
    """Field-name mapping for record-per-line intent files.

    The source schema is not fixed by the datasets' publishers, so the
    field names are configuration rather than constants.
    """

    text_field: str = "string"
    label_field: str = "label"
    id_field: str = "unique_id"


def load_scicite_split(
    path: str | Path,
    split: str,
    config: LoaderConfig | None = None,
    scheme: LabelScheme = INTENT_SCHEME,
) -> Corpus:
    """Load one record-per-line intent file into a corpus.

    Malformed lines (bad JSON, missing fields, empty text) are counted and
    logged. An unknown label string is a hard error, as is a file with zero
    parseable records.
    """
    cfg = config or LoaderConfig()
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"missing input file: {path}")

    instances: list[CitationInstance] = []
    malformed: list[int] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                malformed.append(lineno)
                continue
            text = record.get(cfg.text_field)
            label_name = record.get(cfg.label_field)
            if not isinstance(text, str) or not text.strip() or label_name is None:
                malformed.append(lineno)
                continue
            if label_name not in scheme.labels:
                raise DataFormatError(
                    f"{path}:{lineno}: unknown label {label_name!r}; expected one of {scheme.labels}"
                )
            inst_id = str(record.get(cfg.id_field) or f"{split}-{lineno}")
            meta = {"split": split}
            for key in ("citingPaperId", "citedPaperId", "sectionName"):
                if record.get(key):
                    meta[key] = str(record[key])
            instances.append(CitationInstance(inst_id, text, scheme.index_of(label_name), meta))

    if malformed:
        logger.warning(
            "%s: skipped %d malformed line(s): %s%s",
            path,
            len(malformed),
            malformed[:10],
            "..." if len(malformed) > 10 else "",
        )
    if not instances:
        raise DataFormatError(
            f"{path}: zero parseable records ({len(malformed)} malformed lines: {malformed[:20]})"
        )
    return Corpus(scheme, tuple(instances), name=f"scicite-{split}")


def load_scicite(
    train_path: str | Path,
    val_path: str | Path,
    test_path: str | Path,
    config: LoaderConfig | None = None,
) -> tuple[Corpus, Corpus, Corpus]:
    """Load the three intent splits; ``meta['split']`` records the origin."""
    return (
        load_scicite_split(train_path, "train", config),
        load_scicite_split(val_path, "val", config),
        load_scicite_split(test_path, "test", config),
    )


def load_csc(path: str | Path) -> Corpus:
    """Load the raw tab-delimited sentiment corpus.

    Expected record layout: citing id, cited id, sentiment code (p/n/o),
    citation text. Records with unknown codes or empty text are skipped
    with a warning so a corrupted line cannot block the ingest.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"missing input file: {path}")

    scheme = SENTIMENT_SCHEME
    instances: list[CitationInstance] = []
    skipped_code = 0
    skipped_text = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 4:
                skipped_code += 1
                logger.warning("%s:%d: expected 4 tab-separated fields, got %d", path, lineno, len(parts))
                continue
            citing, cited, code, text = parts[0], parts[1], parts[2].strip().lower(), "\t".join(parts[3:])
            if code not in SENTIMENT_CODE_MAP:
                skipped_code += 1
                logger.warning("%s:%d: unknown sentiment code %r", path, lineno, parts[2])
                continue
            if not text.strip():
                skipped_text += 1
                logger.warning("%s:%d: empty citation text", path, lineno)
                continue
            label = scheme.index_of(SENTIMENT_CODE_MAP[code])
            meta = {"citing": citing, "cited": cited, "line": str(lineno)}
            instances.append(CitationInstance(f"csc-{lineno:06d}", text, label, meta))

    if skipped_code or skipped_text:
        logger.warning(
            "%s: skipped %d record(s) with unknown codes and %d with empty text",
            path,
            skipped_code,
            skipped_text,
        )
    if not instances:
        raise DataFormatError(f"{path}: zero parseable records")
    return Corpus(scheme, tuple(instances), name="csc")


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistributionStats:
    """Per-class counts and fractions for one corpus."""

    scheme: LabelScheme
    counts: tuple[int, ...]
    total: int

    @property
    def percentages(self) -> tuple[float, ...]:
        """Fractions of the total, in scheme order. Rounding is left to presentation."""
        return tuple(c / self.total for c in self.counts)

    def rows(self) -> list[dict]:
        return [
            {"class": name, "count": count, "percentage": pct}
            for name, count, pct in zip(self.scheme.labels, self.counts, self.percentages)
        ]


def class_distribution(corpus: Corpus) -> DistributionStats:
    if len(corpus) == 0:
        raise DataFormatError("class distribution of an empty corpus is undefined")
    counts = corpus.class_counts()
    return DistributionStats(corpus.scheme, counts, len(corpus))


@dataclass(frozen=True)
class LengthStats:
    """Per-class mean token/character lengths plus bucketed token histograms.

    Means are ``None`` for empty classes, never zero. Histogram mass per
    class equals the class count.
    """

    scheme: LabelScheme
    mean_tokens: tuple[float | None, ...]
    mean_chars: tuple[float | None, ...]
    bucket_width: int
    histograms: tuple[tuple[tuple[int, int], ...], ...]  # per class: ((bucket_start, count), ...)

    def to_plot_json(self) -> dict:
        """Plot-ready mapping: class name -> histogram buckets."""
        out: dict[str, dict] = {}
        for i, name in enumerate(self.scheme.labels):
            out[name] = {
                "mean_tokens": self.mean_tokens[i],
                "mean_chars": self.mean_chars[i],
                "bucket_width": self.bucket_width,
                "buckets": [
                    {"lo": start, "hi": start + self.bucket_width, "count": count}
                    for start, count in self.histograms[i]
                ],
            }
        return out


def length_stats(
    corpus: Corpus,
    tokenizer: Callable[[str], list[str]] = tokenize,
    bucket_width: int = 25,
) -> LengthStats:
    """Token and character length summaries per class.

    Both units are reported because published summaries of these corpora
    are ambiguous about which one they use.
    """
    if bucket_width < 1:
        raise ValueError("bucket_width must be >= 1")
    per_class_tokens: list[list[int]] = [[] for _ in corpus.scheme.labels]
    per_class_chars: list[list[int]] = [[] for _ in corpus.scheme.labels]
    for inst in corpus:
        per_class_tokens[inst.label].append(len(tokenizer(inst.text)))
        per_class_chars[inst.label].append(len(inst.text))

    mean_tokens: list[float | None] = []
    mean_chars: list[float | None] = []
    histograms: list[tuple[tuple[int, int], ...]] = []
    for toks, chars in zip(per_class_tokens, per_class_chars):
        if not toks:
            mean_tokens.append(None)
            mean_chars.append(None)
            histograms.append(())
            continue
        mean_tokens.append(sum(toks) / len(toks))
        mean_chars.append(sum(chars) / len(chars))
        buckets: dict[int, int] = {}
        for n in toks:
            start = (n // bucket_width) * bucket_width
            buckets[start] = buckets.get(start, 0) + 1
        histograms.append(tuple(sorted(buckets.items())))

    return LengthStats(
        corpus.scheme,
        tuple(mean_tokens),
        tuple(mean_chars),
        bucket_width,
        tuple(histograms),
    )


# ---------------------------------------------------------------------------
# Canonical export
# ---------------------------------------------------------------------------


def export_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the canonical record-per-line export.

    The first line is a header object carrying the scheme so an empty
    corpus still reimports; labels are stored by name, not index.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": EXPORT_FORMAT,
        "version": EXPORT_VERSION,
        "task": corpus.scheme.task,
        "labels": list(corpus.scheme.labels),
        "name": corpus.name,
    }
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for inst in corpus:
            record = {
                "id": inst.id,
                "text": inst.text,
                "label": corpus.scheme.name_of(inst.label),
                "meta": dict(inst.meta),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_corpus(path: str | Path) -> Corpus:
    """Load a canonical export written by :func:`export_corpus`."""
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"missing input file: {path}")
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise DataFormatError(f"{path}: missing export header")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: unreadable export header: {exc}") from exc
        if header.get("format") != EXPORT_FORMAT:
            raise DataFormatError(f"{path}: not a corpus export (format={header.get('format')!r})")
        if header.get("version") != EXPORT_VERSION:
            raise DataFormatError(f"{path}: unsupported export version {header.get('version')!r}")
        scheme = LabelScheme(header["task"], tuple(header["labels"]))
        instances: list[CitationInstance] = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                inst = CitationInstance(
                    str(record["id"]),
                    record["text"],
                    scheme.index_of(record["label"]),
                    dict(record.get("meta", {})),
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad export record: {exc}") from exc
            instances.append(inst)
    return Corpus(scheme, tuple(instances), name=header.get("name", path.stem))


def file_sha256(path: str | Path) -> str:
    """Checksum helper used by manifests and the fetch command."""
    import hashlib

    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def percent(value: float, decimals: int = 2) -> float:
    """Presentation-time percentage rounding (stored values stay exact)."""
    return round(100.0 * value, decimals)
