"""Seeded synthetic corpora for tests and for data-free acceptance runs.

Two generators matter: keyword-separable corpora (each class owns a few
marker tokens, so a bag-of-words rule can verify learnability) and
corpora with planted duplicate groups whose expected cleansing ledger is
known by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CitationInstance, Corpus, LabelScheme, SENTIMENT_SCHEME

_FILLERS = (
    "the", "authors", "report", "that", "prior", "work", "on", "this",
    "task", "used", "a", "corpus", "of", "documents", "and", "compared",
    "results", "across", "settings", "with", "standard", "tools",
)


def class_keywords(scheme: LabelScheme, per_class: int = 3) -> list[list[str]]:
    return [
        [f"{name}marker{j}" for j in range(per_class)]
        for name in scheme.labels
    ]


def make_separable_corpus(
    n: int,
    scheme: LabelScheme = SENTIMENT_SCHEME,
    seed: int = 0,
    name: str = "synthetic",
    balanced: bool = True,
    class_fractions: tuple[float, ...] | None = None,
) -> Corpus:
    """Corpus whose class is determined by class-unique marker tokens.

    Every instance contains two markers of its own class and none of any
    other class, so a keyword rule can reproduce the labels exactly.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    keywords = class_keywords(scheme)
    k = scheme.num_classes
    if class_fractions is not None:
        probs = np.asarray(class_fractions, dtype=np.float64)
        probs = probs / probs.sum()
        labels = [int(rng.choice(k, p=probs)) for _ in range(n)]
    elif balanced:
        labels = [i % k for i in range(n)]
    else:
        labels = [int(rng.integers(0, k)) for _ in range(n)]

    instances = []
    for i, label in enumerate(labels):
        marks = [str(w) for w in rng.choice(keywords[label], size=2, replace=False)]
        fillers = [str(w) for w in rng.choice(_FILLERS, size=int(rng.integers(3, 7)))]
        words = marks + fillers + [f"doc{i}"]
        order = rng.permutation(len(words))
        text = " ".join(words[j] for j in order)
        instances.append(CitationInstance(f"syn-{i:05d}", text, label, {"origin": "synthetic"}))
    return Corpus(scheme, tuple(instances), name)


def keyword_rule_labels(corpus: Corpus) -> list[int]:
    """Bag-of-words oracle: label = the class whose markers appear in the text."""
    keywords = class_keywords(corpus.scheme)
    labels = []
    for inst in corpus:
        tokens = set(inst.text.split())
        hits = [c for c, kws in enumerate(keywords) if tokens & set(kws)]
        if len(hits) != 1:
            raise ValueError(f"instance {inst.id!r} matches {len(hits)} classes")
        labels.append(hits[0])
    return labels


@dataclass(frozen=True)
class DuplicatePlant:
    """Expected cleansing ledger for a generated corpus."""

    removed_conflicting: tuple[int, ...]
    removed_duplicate: tuple[int, ...]
    retained: tuple[int, ...]


def make_corpus_with_duplicates(
    scheme: LabelScheme = SENTIMENT_SCHEME,
    seed: int = 0,
    n_unique: int = 60,
    n_conflict_groups: int = 3,
    n_duplicate_groups: int = 4,
    vary_whitespace: bool = True,
    name: str = "planted",
) -> tuple[Corpus, DuplicatePlant]:
    """Clean base corpus plus planted conflicting and same-label duplicate groups.

    Returns the corpus (instances shuffled into a random order) together
    with the per-class removal counts cleansing must reproduce.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    k = scheme.num_classes
    instances: list[CitationInstance] = []
    removed_conflicting = [0] * k
    removed_duplicate = [0] * k
    retained = [0] * k
    uid = 0

    def next_id() -> str:
        nonlocal uid
        uid += 1
        return f"pl-{uid:05d}"

    def mutate_ws(text: str) -> str:
        if not vary_whitespace or rng.random() < 0.5:
            return text
        sep = str(rng.choice([" ", "  ", "\t", " \t "]))
        return sep.join(text.split(" ")) + str(rng.choice(["", " ", "  "]))

    for i in range(n_unique):
        label = int(rng.integers(0, k))
        text = f"unique passage {i} about topic {int(rng.integers(0, 1000))}"
        instances.append(CitationInstance(next_id(), text, label, {}))
        retained[label] += 1

    for g in range(n_conflict_groups):
        size = int(rng.integers(2, 5))
        labels = [int(x) for x in rng.integers(0, k, size=size)]
        if len(set(labels)) == 1:  # force a genuine conflict
            labels[-1] = (labels[0] + 1) % k
        text = f"conflicting shared passage number {g}"
        for label in labels:
            instances.append(CitationInstance(next_id(), mutate_ws(text), label, {}))
            removed_conflicting[label] += 1

    for g in range(n_duplicate_groups):
        size = int(rng.integers(2, 6))
        label = int(rng.integers(0, k))
        text = f"repeated consistent passage number {g}"
        for _ in range(size):
            instances.append(CitationInstance(next_id(), mutate_ws(text), label, {}))
        removed_duplicate[label] += size - 1
        retained[label] += 1

    order = rng.permutation(len(instances))
    shuffled = tuple(instances[j] for j in order)
    plant = DuplicatePlant(tuple(removed_conflicting), tuple(removed_duplicate), tuple(retained))
    return Corpus(scheme, shuffled, name), plant
