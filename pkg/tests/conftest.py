"""Shared fixtures: tiny corpora builders and optional real-dataset discovery.

Real datasets are never bundled. Set CITECLASS_DATA_DIR to a directory
containing the SciCite jsonl splits and/or the raw sentiment corpus file
to enable the golden-count tests; without it they skip and the synthetic
suites carry the checks.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from citeclass.corpus import SENTIMENT_SCHEME, CitationInstance, Corpus

DATA_ENV = "CITECLASS_DATA_DIR"


def find_data_file(*candidates: str) -> Path | None:
    root = os.environ.get(DATA_ENV)
    if not root:
        return None
    for rel in candidates:
        path = Path(root) / rel
        if path.is_file():
            return path
    return None


@pytest.fixture(scope="session")
def scicite_paths():
    train = find_data_file("scicite/train.jsonl", "train.jsonl")
    val = find_data_file("scicite/dev.jsonl", "scicite/val.jsonl", "dev.jsonl", "val.jsonl")
    test = find_data_file("scicite/test.jsonl", "test.jsonl")
    if not (train and val and test):
        pytest.skip(f"SciCite files not found; set {DATA_ENV}")
    return train, val, test


@pytest.fixture(scope="session")
def csc_path():
    path = find_data_file(
        "csc/citation_sentiment_corpus.txt", "citation_sentiment_corpus.txt", "csc.txt"
    )
    if not path:
        pytest.skip(f"raw sentiment corpus not found; set {DATA_ENV}")
    return path


def corpus_from_counts(counts, scheme=SENTIMENT_SCHEME, name="counted") -> Corpus:
    """Corpus with the given per-class counts; texts are unique."""
    instances = []
    i = 0
    for cls, n in enumerate(counts):
        for _ in range(n):
            instances.append(CitationInstance(f"c{i:06d}", f"instance text {i}", cls, {}))
            i += 1
    return Corpus(scheme, tuple(instances), name)


def corpus_from_pairs(pairs, scheme=SENTIMENT_SCHEME, name="paired") -> Corpus:
    """Corpus from (text, label) pairs, ids by position."""
    instances = tuple(
        CitationInstance(f"p{i:04d}", text, label, {}) for i, (text, label) in enumerate(pairs)
    )
    return Corpus(scheme, instances, name)
