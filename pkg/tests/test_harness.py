"""Experiment harness: config hashing, orchestration, manifests, CLI."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np
import pytest

from citeclass.corpus import SENTIMENT_SCHEME, export_corpus, file_sha256, read_corpus
from citeclass.errors import ConfigError, StageError, StratificationError
from citeclass.harness import ExperimentConfig, run_experiment
from citeclass.harness.cli import main as cli_main
from citeclass.harness.fetch import fetch
from citeclass.harness.report import ResultRow, emit_report
from citeclass.metrics import CVAggregate, EvaluationReport
from citeclass.synthetic import make_corpus_with_duplicates, make_separable_corpus

from conftest import corpus_from_counts

TINY_MODEL = {
    "topology": "cnn", "layers": 2, "filters": 6, "conv_widths": [2, 3],
    "embedding_dim": 10, "max_seq_len": 14, "dropout": 0.2, "seed": 1,
}


def write_corpus_file(tmp_path, corpus, name="corpus.jsonl"):
    path = tmp_path / name
    export_corpus(corpus, path)
    return path


def fixed_config(tmp_path, data_path, **overrides):
    base = {
        "task": "sentiment",
        "data": {"dataset": "export", "path": str(data_path)},
        "model": dict(TINY_MODEL),
        "split": {"kind": "fixed_ratio", "ratio": 0.7, "seed": 3, "stratified": True},
        "strategy": "none",
        "epochs": 4,
        "patience": 3,
        "learning_rate": 0.05,
        "batch_size": 16,
        "seed": 9,
        "out_dir": str(tmp_path / "runs"),
    }
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


def cv_config(tmp_path, data_path, **overrides):
    base = {
        "task": "sentiment",
        "data": {"dataset": "export", "path": str(data_path)},
        "model": dict(TINY_MODEL),
        "split": {"kind": "kfold", "k": 5, "seed": 3, "stratified": True},
        "strategy": "downsample_balanced",
        "epochs": 3,
        "learning_rate": 0.05,
        "batch_size": 16,
        "seed": 4,
        "out_dir": str(tmp_path / "runs"),
    }
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


# --- configuration -------------------------------------------------------------


def test_config_hash_is_canonical_and_location_free(tmp_path):
    config_a = fixed_config(tmp_path, "data.jsonl")
    config_b = fixed_config(tmp_path, "data.jsonl", out_dir=str(tmp_path / "elsewhere"))
    assert config_a.run_id() == config_b.run_id()
    different = fixed_config(tmp_path, "data.jsonl", seed=10)
    assert config_a.run_id() != different.run_id()
    digest = hashlib.sha256(config_a.canonical_json().encode()).hexdigest()[:12]
    assert config_a.run_id() == digest


def test_config_rejects_unknown_keys(tmp_path):
    raw = fixed_config(tmp_path, "x.jsonl").to_dict()
    raw["mystery_knob"] = 3
    with pytest.raises(ConfigError, match="mystery_knob"):
        ExperimentConfig.from_dict(raw)
    raw = fixed_config(tmp_path, "x.jsonl").to_dict()
    raw["model"]["hidden_extra"] = 1
    with pytest.raises(ConfigError, match="hidden_extra"):
        ExperimentConfig.from_dict(raw)


def test_config_downsample_requires_kfold(tmp_path):
    with pytest.raises(ConfigError, match="downsample_balanced"):
        fixed_config(tmp_path, "x.jsonl", strategy="downsample_balanced")


def test_config_task_dataset_consistency(tmp_path):
    with pytest.raises(ConfigError, match="sentiment"):
        fixed_config(tmp_path, "x.jsonl", task="intent", data={"dataset": "csc", "path": "x"})
    scicite_data = {"dataset": "scicite", "train": "a", "val": "b", "test": "c"}
    with pytest.raises(ConfigError, match="intent"):
        fixed_config(tmp_path, "x.jsonl", task="sentiment", data=scicite_data,
                     split={"kind": "provided"})


def test_config_file_round_trip(tmp_path):
    config = fixed_config(tmp_path, "x.jsonl")
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config.to_dict()), encoding="utf-8")
    again = ExperimentConfig.from_file(path)
    assert again == config
    assert again.run_id() == config.run_id()


# --- fixed-split experiments ------------------------------------------------------


def test_run_experiment_fixed_writes_complete_manifest(tmp_path):
    corpus = make_separable_corpus(80, seed=2)
    data_path = write_corpus_file(tmp_path, corpus)
    config = fixed_config(tmp_path, data_path)
    result, manifest = run_experiment(config)
    assert isinstance(result, EvaluationReport)
    assert result.micro_f1 > 0.5  # separable set, should learn quickly

    run_dir = Path(config.out_dir) / f"run-{config.run_id()}"
    on_disk = sorted(p.name for p in run_dir.iterdir())
    assert sorted(manifest.artifacts) == on_disk
    assert manifest.status == "complete"
    assert str(data_path) in manifest.dataset_checksums
    assert manifest.prng == "numpy.random.PCG64"
    stages = [s["name"] for s in manifest.stages]
    assert stages == ["ingest", "split", "train", "evaluate", "report"]


def test_run_experiment_never_mutates_inputs(tmp_path):
    corpus = make_separable_corpus(60, seed=3)
    data_path = write_corpus_file(tmp_path, corpus)
    before = file_sha256(data_path)
    run_experiment(fixed_config(tmp_path, data_path))
    assert file_sha256(data_path) == before


def test_run_experiment_cleanse_stage(tmp_path):
    corpus, plant = make_corpus_with_duplicates(seed=5, n_unique=60)
    data_path = write_corpus_file(tmp_path, corpus)
    config = fixed_config(tmp_path, data_path, cleanse=True, epochs=1)
    result, manifest = run_experiment(config)
    run_dir = Path(config.out_dir) / f"run-{config.run_id()}"
    with open(run_dir / "cleanse_ledger.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["retained"]) for r in rows] == list(plant.retained)
    cleaned = read_corpus(run_dir / "cleaned.jsonl")
    assert cleaned.class_counts() == plant.retained


def test_run_experiment_rerun_is_identical(tmp_path):
    corpus = make_separable_corpus(60, seed=6)
    data_path = write_corpus_file(tmp_path, corpus)
    config = fixed_config(tmp_path, data_path)
    first, _ = run_experiment(config)
    run_dir = Path(config.out_dir) / f"run-{config.run_id()}"
    report_bytes = (run_dir / "report.json").read_bytes()
    second, _ = run_experiment(config)
    assert (run_dir / "report.json").read_bytes() == report_bytes
    assert first.to_dict() == second.to_dict()


# --- cross-validation experiments ---------------------------------------------------


def test_run_experiment_cv_shape(tmp_path):
    corpus = make_separable_corpus(300, seed=5, class_fractions=(0.25, 0.15, 0.6))
    data_path = write_corpus_file(tmp_path, corpus)
    config = cv_config(tmp_path, data_path, split={"kind": "kfold", "k": 10, "seed": 2})
    result, manifest = run_experiment(config)
    assert isinstance(result, CVAggregate)
    assert len(result.fold_reports) == 10
    assert sum(r.n_instances for r in result.fold_reports) == 300
    assert manifest.status == "complete"
    run_dir = Path(config.out_dir) / f"run-{config.run_id()}"
    with open(run_dir / "folds.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 300
    record = json.loads((run_dir / "report.json").read_text())
    assert "averaged" in record["report"] and "pooled" in record["report"]
    fold_train_reports = json.loads((run_dir / "train_report.json").read_text())
    assert len(fold_train_reports) == 10


def test_cv_downsample_trains_on_balanced_folds(tmp_path):
    corpus = make_separable_corpus(200, seed=8, class_fractions=(0.5, 0.1, 0.4))
    data_path = write_corpus_file(tmp_path, corpus)
    config = cv_config(tmp_path, data_path)
    result, _ = run_experiment(config)
    assert isinstance(result, CVAggregate)
    # minority class still classified well: training was rebalanced
    assert result.averaged.macro_f1 > 0.6


def test_cv_workers_do_not_change_results(tmp_path):
    corpus = make_separable_corpus(150, seed=9)
    data_path = write_corpus_file(tmp_path, corpus)
    config = cv_config(tmp_path, data_path, strategy="none")
    serial, _ = run_experiment(config, workers=1)
    run_dir = Path(config.out_dir) / f"run-{config.run_id()}"
    serial_bytes = (run_dir / "report.json").read_bytes()
    parallel, _ = run_experiment(config, workers=4)
    assert (run_dir / "report.json").read_bytes() == serial_bytes
    assert serial.to_dict() == parallel.to_dict()


def test_cv_infeasible_stratification_names_class_and_stage(tmp_path):
    corpus = corpus_from_counts((40, 5, 40))
    texts_fixed = corpus.replaced(corpus.instances)
    data_path = write_corpus_file(tmp_path, texts_fixed)
    config = cv_config(tmp_path, data_path, split={"kind": "kfold", "k": 10, "seed": 0},
                       strategy="none")
    with pytest.raises(StageError, match="split") as excinfo:
        run_experiment(config)
    assert isinstance(excinfo.value.cause, StratificationError)
    assert "negative" in str(excinfo.value)
    run_dir = Path(config.out_dir) / f"run-{config.run_id()}"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["status"] == "failed:split"


# --- report emission ------------------------------------------------------------------


def _report_for(seed, n=40):
    rng = np.random.default_rng(seed)
    gold = rng.integers(0, 3, size=n)
    pred = rng.integers(0, 3, size=n)
    return EvaluationReport.from_predictions(gold, pred, SENTIMENT_SCHEME)


def test_emit_report_single_row():
    row = ResultRow("cnn", "L3 F100 C3,4,5", "none", _report_for(1))
    text = emit_report([row], "md")
    lines = text.strip().split("\n")
    assert len(lines) == 3  # header, rule, one row
    numeric_cells = lines[2].split("|")[4:-1]
    assert len(numeric_cells) == 5  # three class columns + micro + macro


def test_emit_report_grid_sorted(tmp_path):
    rows = []
    for i, arch in enumerate(["L3 F100 C3,4,5", "L3 F100 C2,4,6", "L3 F100 C3,3,3"]):
        rows.append(ResultRow("cnn", arch, "none", _report_for(i)))
    for i, arch in enumerate(["L2 F512", "L4 F512"]):
        rows.append(ResultRow("lstm", arch, "focal", _report_for(10 + i)))
    rows.append(ResultRow("rnn", "L2 F512", "none", _report_for(20)))
    text = emit_report(rows, "csv", tmp_path / "grid.csv")
    with open(tmp_path / "grid.csv", newline="") as fh:
        records = list(csv.DictReader(fh))
    assert len(records) == 6
    topo_order = [r["topology"] for r in records]
    assert topo_order == sorted(topo_order)
    cnn_archs = [r["architecture"] for r in records if r["topology"] == "cnn"]
    assert cnn_archs == sorted(cnn_archs)


def test_emit_report_empty_errors():
    with pytest.raises(ValueError, match="no reports"):
        emit_report([], "md")


# --- fetch ------------------------------------------------------------------------------


def test_fetch_verifies_checksum(tmp_path):
    source = tmp_path / "source.txt"
    source.write_bytes(b"dataset bytes")
    digest = file_sha256(source)
    dest = tmp_path / "fetched.txt"
    got = fetch(source.as_uri(), dest, digest)
    assert got.read_bytes() == b"dataset bytes"
    # second call is a no-op verify
    assert fetch(source.as_uri(), dest, digest) == dest


def test_fetch_rejects_bad_checksum(tmp_path):
    from citeclass.errors import ChecksumMismatchError

    source = tmp_path / "source.txt"
    source.write_bytes(b"dataset bytes")
    with pytest.raises(ChecksumMismatchError):
        fetch(source.as_uri(), tmp_path / "out.txt", "0" * 64)
    assert not (tmp_path / "out.txt").exists()


# --- CLI --------------------------------------------------------------------------------


def test_cli_stats_prints_distribution(tmp_path, capsys):
    corpus = make_separable_corpus(30, seed=1)
    data_path = write_corpus_file(tmp_path, corpus)
    assert cli_main(["stats", "--input", str(data_path)]) == 0
    out = capsys.readouterr().out
    assert "class,count,percentage" in out
    assert "positive,10" in out


def test_cli_clean_writes_ledger(tmp_path, capsys):
    corpus, plant = make_corpus_with_duplicates(seed=3)
    data_path = write_corpus_file(tmp_path, corpus)
    out_dir = tmp_path / "cleaned"
    code = cli_main(["clean", "--input", str(data_path), "--dataset", "export",
                     "--out", str(out_dir)])
    assert code == 0
    cleaned = read_corpus(out_dir / "cleaned.jsonl")
    assert cleaned.class_counts() == plant.retained
    with open(out_dir / "ledger.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["class"] for r in rows] == list(SENTIMENT_SCHEME.labels)


def test_cli_split_kfold(tmp_path, capsys):
    corpus = make_separable_corpus(50, seed=2)
    data_path = write_corpus_file(tmp_path, corpus)
    out_dir = tmp_path / "splits"
    code = cli_main(["split", "--input", str(data_path), "--kind", "kfold",
                     "--k", "5", "--seed", "3", "--out", str(out_dir)])
    assert code == 0
    with open(out_dir / "folds.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 50


def test_cli_evaluate_identical_files_scores_one(tmp_path, capsys):
    gold = tmp_path / "g.csv"
    gold.write_text("id,label\nx1,positive\nx2,neutral\nx3,negative\n", encoding="utf-8")
    pred = tmp_path / "p.csv"
    pred.write_text(gold.read_text(), encoding="utf-8")
    code = cli_main(["evaluate", "--task", "sentiment", "--gold", str(gold), "--pred", str(pred)])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["micro_f1"] == 1.0
    assert payload["macro_f1"] == 1.0


def test_cli_train_and_report_round_trip(tmp_path, capsys):
    corpus = make_separable_corpus(60, seed=4)
    data_path = write_corpus_file(tmp_path, corpus)
    config = fixed_config(tmp_path, data_path, epochs=2)
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config.to_dict()), encoding="utf-8")

    assert cli_main(["train", "--config", str(config_path)]) == 0
    out = capsys.readouterr().out
    assert "| Topology |" in out and "cnn" in out

    report_path = Path(config.out_dir) / f"run-{config.run_id()}" / "report.json"
    assert cli_main(["report", "--inputs", str(report_path), "--format", "md"]) == 0
    table = capsys.readouterr().out
    assert "L2 F6 C2,3" in table


def test_cli_cv_requires_kfold_config(tmp_path, capsys):
    corpus = make_separable_corpus(40, seed=4)
    data_path = write_corpus_file(tmp_path, corpus)
    config = fixed_config(tmp_path, data_path)
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config.to_dict()), encoding="utf-8")
    code = cli_main(["cv", "--config", str(config_path)])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "DataFormatError"


def test_cli_reports_errors_as_json(tmp_path, capsys):
    code = cli_main(["stats", "--input", str(tmp_path / "missing.jsonl")])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "DataFormatError"
    assert "missing" in err["error"]["message"]


def test_cli_fetch_checksum_failure(tmp_path, capsys):
    source = tmp_path / "s.bin"
    source.write_bytes(b"abc")
    code = cli_main(["fetch", "--url", source.as_uri(), "--dest", str(tmp_path / "d.bin"),
                     "--sha256", "ff" * 32])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "ChecksumMismatchError"
