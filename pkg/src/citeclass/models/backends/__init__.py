"""Pretrained-encoder backends behind a narrow interface.

A checkpoint id has the form ``family:locator`` (for example
``avgembed:/path/ckpt.npz`` or ``transformers:bert-base-uncased``). The
family picks a registered backend; the locator is handed to it. Backends
must return classifiers honoring the common predict contract.
"""

from __future__ import annotations

from typing import Callable

from ...corpus import Corpus
from ...errors import BackendUnavailableError, ConfigError

_REGISTRY: dict[str, Callable[[], object]] = {}


def register_backend(name: str, factory: Callable[[], object]) -> None:
    _REGISTRY[name] = factory


def available_backends() -> list[str]:
    return sorted(_REGISTRY)


def get_backend(name: str):
    factory = _REGISTRY.get(name)
    if factory is None:
        raise BackendUnavailableError(name, f"registered backends: {available_backends()}")
    return factory()


def split_checkpoint_id(checkpoint_id: str) -> tuple[str, str]:
    family, sep, locator = checkpoint_id.partition(":")
    if not sep or not family or not locator:
        raise ConfigError(
            f"checkpoint id {checkpoint_id!r} must look like 'family:locator', "
            f"e.g. 'avgembed:/path/to/ckpt.npz'"
        )
    return family, locator


def fine_tune_with_report(
    checkpoint_id: str,
    train_corpus: Corpus,
    val_corpus: Corpus | None,
    hyperparams: dict | None = None,
    seed: int = 0,
):
    family, locator = split_checkpoint_id(checkpoint_id)
    backend = get_backend(family)
    return backend.fine_tune(locator, train_corpus, val_corpus, hyperparams or {}, seed)


def fine_tune(
    checkpoint_id: str,
    train_corpus: Corpus,
    val_corpus: Corpus | None = None,
    hyperparams: dict | None = None,
    seed: int = 0,
):
    """Fine-tune the checkpoint's encoder with a classification head."""
    classifier, _ = fine_tune_with_report(checkpoint_id, train_corpus, val_corpus, hyperparams, seed)
    return classifier


def _avgembed_factory():
    from .avgembed import AvgEmbedBackend

    return AvgEmbedBackend()


def _transformers_factory():
    from .hf import TransformersBackend

    return TransformersBackend()


register_backend("avgembed", _avgembed_factory)
register_backend("transformers", _transformers_factory)
