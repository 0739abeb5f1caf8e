"""Vocabulary construction and text-to-id encoding for the baseline models."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..corpus import Corpus
from ..text import tokenize

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1


@dataclass(frozen=True)
class Vocabulary:
    """Token -> dense id map. Ids 0 and 1 are reserved for padding and unknown."""

    tokens: tuple[str, ...]
    min_frequency: int = 1

    def __post_init__(self):
        if self.tokens[:2] != (PAD_TOKEN, UNK_TOKEN):
            raise ValueError("vocabulary must reserve ids 0 (pad) and 1 (unk)")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)


def build_vocab(train: Corpus, min_frequency: int = 1) -> Vocabulary:
    """Vocabulary over the train split only.

    Tokens with frequency >= min_frequency get ids in frequency-descending,
    then lexicographic, order, so ids are deterministic.
    """
    if len(train) == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    for inst in train:
        counts.update(tokenize(inst.text.lower()))
    kept = [t for t, c in counts.items() if c >= min_frequency]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary((PAD_TOKEN, UNK_TOKEN, *kept), min_frequency)


def encode(text: str, vocab: Vocabulary, max_seq_len: int) -> np.ndarray:
    """Lowercased token ids, truncated to max_seq_len and right-padded with 0."""
    ids = [vocab.id_of(t) for t in tokenize(text.lower())[:max_seq_len]]
    out = np.full(max_seq_len, PAD_ID, dtype=np.int64)
    out[: len(ids)] = ids
    return out


def encode_batch(
    texts: Iterable[str] | Sequence[str], vocab: Vocabulary, max_seq_len: int
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked padded ids plus the unpadded length of each row (min 1)."""
    rows = []
    lengths = []
    for text in texts:
        row = encode(text, vocab, max_seq_len)
        rows.append(row)
        lengths.append(max(int(np.count_nonzero(row != PAD_ID)), 1))
    return np.stack(rows), np.asarray(lengths, dtype=np.int64)
