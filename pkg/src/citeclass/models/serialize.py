"""Versioned binary container for trained classifiers.

One ``.npz``-based file carries a schema version, the config snapshot,
the vocabulary (or embedding table), and the weights, plus a checksum
over the weight bytes. Loading verifies the version first, then the
checksum, so corruption and stale formats surface as distinct errors.
"""

from __future__ import annotations

import hashlib
import json
import zipfile
from pathlib import Path

import numpy as np

from ..corpus import LabelScheme
from ..errors import ModelIntegrityError, ModelVersionError
from .train import Classifier, ModelConfig
from .vocab import Vocabulary

SCHEMA_VERSION = 1


def _checksum(arrays: dict[str, np.ndarray]) -> str:
    digest = hashlib.sha256()
    for key in sorted(arrays):
        arr = np.ascontiguousarray(arrays[key])
        digest.update(key.encode())
        digest.update(str(arr.dtype).encode())
        digest.update(str(arr.shape).encode())
        digest.update(arr.tobytes())
    return digest.hexdigest()


def save_model(classifier, path: str | Path) -> Path:
    """Serialize a baseline or avgembed classifier to one file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if classifier.kind == "baseline":
        arrays = {f"param/{k}": v for k, v in classifier.params.items()}
        meta = {
            "schema_version": SCHEMA_VERSION,
            "kind": "baseline",
            "model_config": classifier.config.to_dict(),
            "task": classifier.scheme.task,
            "labels": list(classifier.scheme.labels),
            "vocab_tokens": list(classifier.vocab.tokens),
            "vocab_min_frequency": classifier.vocab.min_frequency,
        }
    elif classifier.kind == "avgembed":
        arrays = {
            "param/table": classifier.table,
            "param/head_w": classifier.head_w,
            "param/head_b": classifier.head_b,
        }
        meta = {
            "schema_version": SCHEMA_VERSION,
            "kind": "avgembed",
            "task": classifier.scheme.task,
            "labels": list(classifier.scheme.labels),
            "checkpoint": classifier.checkpoint,
        }
    else:
        raise ModelIntegrityError(
            f"save_model does not handle classifier kind {classifier.kind!r}"
        )

    meta["checksum"] = _checksum(arrays)
    payload = json.dumps(meta, ensure_ascii=False).encode()
    with path.open("wb") as fh:
        np.savez_compressed(fh, __meta__=np.frombuffer(payload, dtype=np.uint8), **arrays)
    return path


def load_model(path: str | Path):
    """Inverse of :func:`save_model`; predictions round-trip bit-for-bit."""
    path = Path(path)
    if not path.is_file():
        raise ModelIntegrityError(f"model file not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            if "__meta__" not in data:
                raise ModelIntegrityError(f"{path} has no model metadata")
            meta = json.loads(bytes(data["__meta__"]).decode())
            version = meta.get("schema_version")
            if version != SCHEMA_VERSION:
                raise ModelVersionError(
                    f"{path} uses schema version {version}; this build reads {SCHEMA_VERSION}"
                )
            arrays = {k: np.asarray(data[k]) for k in data.files if k.startswith("param/")}
    except (ModelVersionError, ModelIntegrityError):
        raise
    except (ValueError, OSError, KeyError, EOFError, zipfile.BadZipFile, json.JSONDecodeError) as exc:
        raise ModelIntegrityError(f"unreadable model file {path}: {exc}") from exc

    if _checksum(arrays) != meta.get("checksum"):
        raise ModelIntegrityError(f"{path} failed its weight checksum; file is corrupt")

    scheme = LabelScheme(meta["task"], tuple(meta["labels"]))
    if meta["kind"] == "baseline":
        config = ModelConfig.from_dict(meta["model_config"])
        vocab = Vocabulary(tuple(meta["vocab_tokens"]), meta["vocab_min_frequency"])
        params = {k.removeprefix("param/"): v for k, v in arrays.items()}
        return Classifier(config, scheme, vocab, params)
    if meta["kind"] == "avgembed":
        from .backends.avgembed import AvgEmbedClassifier

        return AvgEmbedClassifier(
            scheme,
            arrays["param/table"],
            arrays["param/head_w"],
            arrays["param/head_b"],
            meta.get("checkpoint", ""),
        )
    raise ModelIntegrityError(f"{path} holds unknown classifier kind {meta['kind']!r}")
