"""Transformer fine-tuning backend (optional; needs torch + transformers).

Wraps any sequence-classification checkpoint the transformers library can
load, including bidirectional and permutation-based encoders, behind the
toolkit's classifier contract. Checkpoints are external inputs: this
module never downloads anything unless the underlying library does.
"""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from ...corpus import CitationInstance, Corpus, LabelScheme
from ...errors import BackendUnavailableError, CheckpointError
from ...metrics import EvaluationReport


def _import_stack():
    try:
        import torch
        import transformers
    except ImportError as exc:
        raise BackendUnavailableError(
            "transformers", f"install the optional extra: pip install citeclass[transformers] ({exc})"
        ) from exc
    return torch, transformers


class TransformersClassifier:
    kind = "transformers"

    def __init__(self, tokenizer, model, scheme: LabelScheme, checkpoint: str, max_length: int = 256):
        self.tokenizer = tokenizer
        self.model = model
        self.scheme = scheme
        self.checkpoint = checkpoint
        self.max_length = max_length

    def predict(self, instances: Sequence[CitationInstance] | Corpus) -> tuple[np.ndarray, list[int]]:
        torch, _ = _import_stack()
        texts = [inst.text for inst in instances]
        self.model.eval()
        rows = []
        with torch.no_grad():
            for start in range(0, len(texts), 16):
                batch = self.tokenizer(
                    texts[start : start + 16], truncation=True, padding=True,
                    max_length=self.max_length, return_tensors="pt",
                )
                logits = self.model(**batch).logits
                rows.append(torch.softmax(logits, dim=-1).double().numpy())
        probs = np.concatenate(rows, axis=0) if rows else np.zeros((0, self.scheme.num_classes))
        return probs, [int(row.argmax()) for row in probs]

    def save(self, directory) -> None:
        import json
        from pathlib import Path

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.model.save_pretrained(directory)
        self.tokenizer.save_pretrained(directory)
        (directory / "citeclass.json").write_text(
            json.dumps({"kind": self.kind, "task": self.scheme.task,
                        "labels": list(self.scheme.labels), "max_length": self.max_length})
        )


class TransformersBackend:
    name = "transformers"

    def __init__(self):
        _import_stack()  # fail fast with a capability error if the stack is absent

    def fine_tune(
        self,
        locator: str,
        train_corpus: Corpus,
        val_corpus: Corpus | None,
        hyperparams: dict,
        seed: int,
    ):
        torch, transformers = _import_stack()
        from ..train import TrainReport

        scheme = train_corpus.scheme
        try:
            tokenizer = transformers.AutoTokenizer.from_pretrained(locator)
            model = transformers.AutoModelForSequenceClassification.from_pretrained(
                locator, num_labels=scheme.num_classes
            )
        except (OSError, EnvironmentError, ValueError) as exc:
            raise CheckpointError(f"cannot load checkpoint {locator!r}: {exc}") from exc

        epochs = int(hyperparams.get("epochs", 3))
        patience = int(hyperparams.get("patience", 2))
        lr = float(hyperparams.get("learning_rate", 2e-5))
        batch_size = int(hyperparams.get("batch_size", 8))
        max_length = int(hyperparams.get("max_length", 256))

        torch.manual_seed(seed)
        rng = np.random.Generator(np.random.PCG64(seed))
        optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
        texts = [inst.text for inst in train_corpus]
        labels = [inst.label for inst in train_corpus]

        started = time.perf_counter()
        train_trace: list[float] = []
        val_trace: list[float] = []
        best_state = None
        best_metric = -np.inf
        best_epoch: int | None = None
        stale = 0

        for epoch in range(epochs):
            model.train()
            order = rng.permutation(len(texts))
            loss_sum = 0.0
            for start in range(0, len(order), batch_size):
                chunk = [int(i) for i in order[start : start + batch_size]]
                batch = tokenizer(
                    [texts[i] for i in chunk], truncation=True, padding=True,
                    max_length=max_length, return_tensors="pt",
                )
                batch["labels"] = torch.tensor([labels[i] for i in chunk])
                out = model(**batch)
                optimizer.zero_grad()
                out.loss.backward()
                optimizer.step()
                loss_sum += float(out.loss.item()) * len(chunk)
            train_trace.append(loss_sum / len(texts))

            if val_corpus is not None:
                probe = TransformersClassifier(tokenizer, model, scheme, locator, max_length)
                _, predicted = probe.predict(val_corpus)
                gold = [inst.label for inst in val_corpus]
                metric = EvaluationReport.from_predictions(gold, predicted, scheme).macro_f1
                val_trace.append(metric)
                if metric > best_metric:
                    best_metric = metric
                    best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
                    best_epoch = epoch
                    stale = 0
                else:
                    stale += 1
                    if stale >= patience:
                        break
            else:
                best_epoch = epoch

        if best_state is not None:
            model.load_state_dict(best_state)

        classifier = TransformersClassifier(tokenizer, model, scheme, locator, max_length)
        report = TrainReport(
            train_loss=tuple(train_trace),
            val_metric=tuple(val_trace),
            best_epoch=best_epoch,
            epochs_run=len(train_trace),
            wall_clock_sec=time.perf_counter() - started,
            seed=seed,
            config_snapshot={"backend": self.name, "checkpoint": locator,
                             "epochs": epochs, "learning_rate": lr, "batch_size": batch_size},
        )
        return classifier, report
