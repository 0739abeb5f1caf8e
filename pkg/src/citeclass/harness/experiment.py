"""Experiment orchestration: ingest, cleanse, split, train, evaluate, report.

Every run lives in its own directory named by the config hash; the
manifest lists every artifact written plus enough provenance (PRNG,
checksums, versions) to re-execute the run reproducibly.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..cleanse import cleanse
from ..corpus import (
    Corpus,
    export_corpus,
    file_sha256,
    load_csc,
    load_scicite,
    read_corpus,
    scheme_for_task,
)
from ..errors import ConfigError, SchemeError, StageError
from ..metrics import CVAggregate, EvaluationReport, aggregate_cv
from ..models import train as train_model
from ..models.serialize import save_model
from ..splits import (
    PRNG_ALGORITHM,
    FoldAssignment,
    export_fixed_csv,
    export_kfold_csv,
    fixed_split,
    kfold,
)
from .config import ExperimentConfig
from .report import ResultRow, emit_report

DATA_DIR_ENV = "CITECLASS_DATA_DIR"


def resolve_data_path(path: str | Path) -> Path:
    """Resolve a dataset path, falling back to the data-root env var."""
    path = Path(path)
    if path.exists() or path.is_absolute():
        return path
    root = os.environ.get(DATA_DIR_ENV)
    if root:
        candidate = Path(root) / path
        if candidate.exists():
            return candidate
    return path


@dataclass
class RunManifest:
    run_id: str
    config_hash: str
    toolkit_version: str = __version__
    prng: str = PRNG_ALGORITHM
    numpy_version: str = np.__version__
    dataset_checksums: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    status: str = "running"

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "toolkit_version": self.toolkit_version,
            "prng": self.prng,
            "numpy_version": self.numpy_version,
            "dataset_checksums": self.dataset_checksums,
            "stages": self.stages,
            "artifacts": sorted(self.artifacts),
            "status": self.status,
        }

    def write(self, run_dir: Path) -> Path:
        path = run_dir / "manifest.json"
        if "manifest.json" not in self.artifacts:
            self.artifacts.append("manifest.json")
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path


def _run_fold(
    assignment: FoldAssignment,
    corpus: Corpus,
    config: ExperimentConfig,
) -> tuple[int, EvaluationReport, dict]:
    train_c = assignment.train_corpus(corpus)
    test_c = assignment.test_corpus(corpus)
    all_ids = {inst.id for inst in corpus}
    if set(assignment.train_ids) != all_ids - set(assignment.test_ids):
        raise AssertionError(f"fold {assignment.index}: train set is not the test-set complement")

    val_c = None
    if config.val_fraction > 0.0:
        train_c, val_c = fixed_split(
            train_c, 1.0 - config.val_fraction,
            seed=config.split.seed + 1000 + assignment.index, stratified=True,
        )
    classifier, train_report = train_model(
        config.model,
        train_c,
        val_c,
        loss=config.loss,
        strategy=config.strategy,
        epochs=config.epochs,
        seed=config.seed + assignment.index,
        patience=config.patience,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        smote_k=config.smote_k,
    )
    _, predicted = classifier.predict(test_c)
    gold = [inst.label for inst in test_c]
    report = EvaluationReport.from_predictions(gold, predicted, corpus.scheme, fold=assignment.index)
    return assignment.index, report, train_report.to_dict()


def run_experiment(
    config: ExperimentConfig, workers: int = 1
) -> tuple[EvaluationReport | CVAggregate, RunManifest]:
    """Execute one experiment end to end; artifacts land under the run directory."""
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    run_dir = Path(config.out_dir) / f"run-{config.run_id()}"
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(run_id=config.run_id(), config_hash=config.run_id())
    current_stage = "setup"

    def record(name: str, text: str) -> Path:
        path = run_dir / name
        path.write_text(text, encoding="utf-8")
        manifest.artifacts.append(name)
        return path

    @contextmanager
    def stage(name: str):
        nonlocal current_stage
        current_stage = name
        start = time.perf_counter()
        yield
        manifest.stages.append({"name": name, "seconds": time.perf_counter() - start})

    record("config.json", json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")

    try:
        with stage("ingest"):
            dataset = config.data["dataset"]
            provided: tuple[Corpus, Corpus, Corpus] | None = None
            corpus: Corpus | None = None
            if dataset == "scicite":
                paths = {k: resolve_data_path(config.data[k]) for k in ("train", "val", "test")}
                provided = load_scicite(paths["train"], paths["val"], paths["test"])
            elif dataset == "csc":
                paths = {"path": resolve_data_path(config.data["path"])}
                corpus = load_csc(paths["path"])
            else:
                paths = {"path": resolve_data_path(config.data["path"])}
                corpus = read_corpus(paths["path"])
                if corpus.scheme != scheme_for_task(config.task):
                    raise SchemeError(
                        f"corpus at {paths['path']} is a {corpus.scheme.task} corpus; "
                        f"the config says {config.task}"
                    )
            for path in paths.values():
                manifest.dataset_checksums[str(path)] = file_sha256(path)

        if config.cleanse:
            with stage("cleanse"):
                result = cleanse(corpus, name=f"{corpus.name}-clean")
                corpus = result.retained
                rows = result.ledger_rows()
                header = list(rows[0].keys())
                csv_text = ",".join(header) + "\n" + "\n".join(
                    ",".join(str(r[h]) for h in header) for r in rows
                ) + "\n"
                record("cleanse_ledger.csv", csv_text)
                export_corpus(corpus, run_dir / "cleaned.jsonl")
                manifest.artifacts.append("cleaned.jsonl")

        assignments: list[FoldAssignment] | None = None
        with stage("split"):
            if config.split.kind == "provided":
                train_c, val_c, test_c = provided
                if not config.use_provided_val:
                    val_c = None
            elif config.split.kind == "fixed_ratio":
                train_c, test_c = fixed_split(
                    corpus, config.split.ratio, config.split.seed, config.split.stratified
                )
                val_c = None
                if config.val_fraction > 0.0:
                    train_c, val_c = fixed_split(
                        train_c, 1.0 - config.val_fraction,
                        seed=config.split.seed + 1, stratified=config.split.stratified,
                    )
                export_fixed_csv(train_c, test_c, run_dir / "split.csv")
                manifest.artifacts.append("split.csv")
            else:
                assignments = kfold(corpus, config.split.k, config.split.seed)
                export_kfold_csv(assignments, run_dir / "folds.csv")
                manifest.artifacts.append("folds.csv")

        if assignments is None:
            with stage("train"):
                classifier, train_report = train_model(
                    config.model,
                    train_c,
                    val_c,
                    loss=config.loss,
                    strategy=config.strategy,
                    epochs=config.epochs,
                    seed=config.seed,
                    patience=config.patience,
                    learning_rate=config.learning_rate,
                    batch_size=config.batch_size,
                    smote_k=config.smote_k,
                )
                record("train_report.json", json.dumps(train_report.to_dict(), indent=2) + "\n")
                if classifier.kind in ("baseline", "avgembed"):
                    save_model(classifier, run_dir / "model.npz")
                    manifest.artifacts.append("model.npz")
            with stage("evaluate"):
                _, predicted = classifier.predict(test_c)
                gold = [inst.label for inst in test_c]
                result: EvaluationReport | CVAggregate = EvaluationReport.from_predictions(
                    gold, predicted, train_c.scheme, split="test"
                )
                headline = result
        else:
            with stage("train"):
                if workers == 1:
                    fold_outputs = [_run_fold(a, corpus, config) for a in assignments]
                else:
                    with ThreadPoolExecutor(max_workers=workers) as pool:
                        futures = [pool.submit(_run_fold, a, corpus, config) for a in assignments]
                        fold_outputs = [f.result() for f in futures]
                fold_outputs.sort(key=lambda item: item[0])
                record(
                    "train_report.json",
                    json.dumps([tr for _, _, tr in fold_outputs], indent=2) + "\n",
                )
            with stage("evaluate"):
                result = aggregate_cv([rep for _, rep, _ in fold_outputs])
                headline = result.averaged

        with stage("report"):
            row = ResultRow(
                topology=config.model.topology,
                architecture=config.model.arch_label(),
                modification=config.strategy,
                report=headline,
            )
            run_record = {
                "run_id": config.run_id(),
                "task": config.task,
                "topology": row.topology,
                "architecture": row.architecture,
                "modification": row.modification,
                "report": result.to_dict(),
            }
            record("report.json", json.dumps(run_record, indent=2) + "\n")
            record("report.csv", emit_report([row], "csv"))
            record("report.md", emit_report([row], "md"))

        manifest.status = "complete"
        manifest.write(run_dir)
        return result, manifest
    except Exception as exc:
        manifest.status = f"failed:{current_stage}"
        try:
            manifest.write(run_dir)
        except OSError:
            pass
        raise StageError(current_stage, exc) from exc
