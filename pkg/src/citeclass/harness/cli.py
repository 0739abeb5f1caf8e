"""Command-line interface.

Each subcommand is a thin wrapper over one module operation. Failures
print a machine-readable error object to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from ..cleanse import cleanse
from ..corpus import (
    Corpus,
    class_distribution,
    export_corpus,
    length_stats,
    load_csc,
    load_scicite_split,
    read_corpus,
    scheme_for_task,
)
from ..errors import CiteclassError, DataFormatError
from ..metrics import ConfusionMatrix, CVAggregate, EvaluationReport
from ..splits import export_fixed_csv, export_kfold_csv, fixed_split, kfold
from .config import ExperimentConfig
from .experiment import resolve_data_path, run_experiment
from .fetch import fetch
from .report import (
    ResultRow,
    distribution_csv,
    emit_report,
    length_stats_csv,
    length_stats_json,
)


def _load_input(path: str, dataset: str, split: str) -> Corpus:
    resolved = resolve_data_path(path)
    if dataset == "csc":
        return load_csc(resolved)
    if dataset == "scicite":
        return load_scicite_split(resolved, split)
    return read_corpus(resolved)


def _cmd_stats(args) -> int:
    corpus = _load_input(args.input, args.dataset, args.split)
    dist = class_distribution(corpus)
    lengths = length_stats(corpus, bucket_width=args.bucket_width)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "distribution.csv").write_text(distribution_csv(dist), encoding="utf-8")
        (out / "lengths.csv").write_text(length_stats_csv(lengths), encoding="utf-8")
        (out / "lengths_hist.json").write_text(length_stats_json(lengths), encoding="utf-8")
        print(f"wrote distribution.csv, lengths.csv, lengths_hist.json to {out}")
    else:
        sys.stdout.write(distribution_csv(dist))
    return 0


def _cmd_clean(args) -> int:
    corpus = _load_input(args.input, args.dataset, "all")
    result = cleanse(corpus, name=f"{corpus.name}-clean")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_corpus(result.retained, out / "cleaned.jsonl")
    with (out / "ledger.csv").open("w", encoding="utf-8", newline="") as fh:
        rows = result.ledger_rows()
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(result.report_text())
    print(f"wrote cleaned.jsonl and ledger.csv to {out}")
    return 0


def _cmd_split(args) -> int:
    corpus = _load_input(args.input, args.dataset, "all")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "fixed":
        train, test = fixed_split(corpus, args.ratio, args.seed, not args.no_stratify)
        export_fixed_csv(train, test, out / "split.csv")
        print(f"train {len(train)} / test {len(test)}; wrote {out / 'split.csv'}")
    else:
        assignments = kfold(corpus, args.k, args.seed)
        export_kfold_csv(assignments, out / "folds.csv")
        sizes = [len(a.test_ids) for a in assignments]
        print(f"{args.k} folds with test sizes {sizes}; wrote {out / 'folds.csv'}")
    return 0


def _experiment_from_args(args) -> tuple[ExperimentConfig, int]:
    config = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        config = config.replace(**overrides)
    return config, args.workers


def _print_result(result: EvaluationReport | CVAggregate, config: ExperimentConfig) -> None:
    headline = result.averaged if isinstance(result, CVAggregate) else result
    row = ResultRow(config.model.topology, config.model.arch_label(), config.strategy, headline)
    sys.stdout.write(emit_report([row], "md"))


def _cmd_train(args) -> int:
    config, workers = _experiment_from_args(args)
    result, manifest = run_experiment(config, workers=workers)
    _print_result(result, config)
    print(f"run {manifest.run_id} complete; artifacts: {Path(config.out_dir) / ('run-' + manifest.run_id)}")
    return 0


def _cmd_cv(args) -> int:
    config, workers = _experiment_from_args(args)
    if config.split.kind != "kfold":
        raise DataFormatError("the cv command needs a config with split kind 'kfold'")
    result, manifest = run_experiment(config, workers=workers)
    _print_result(result, config)
    print(f"run {manifest.run_id} complete; artifacts: {Path(config.out_dir) / ('run-' + manifest.run_id)}")
    return 0


def _read_label_csv(path: str, scheme) -> dict[str, int]:
    resolved = resolve_data_path(path)
    if not Path(resolved).is_file():
        raise DataFormatError(f"missing label file: {resolved}")
    labels: dict[str, int] = {}
    with open(resolved, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataFormatError(f"{resolved}: empty label file")
        id_col = "instance_id" if "instance_id" in reader.fieldnames else "id"
        if id_col not in reader.fieldnames or "label" not in reader.fieldnames:
            raise DataFormatError(f"{resolved}: need columns id (or instance_id) and label")
        for record in reader:
            labels[record[id_col]] = scheme.index_of(record["label"])
    if not labels:
        raise DataFormatError(f"{resolved}: zero label rows")
    return labels


def _cmd_evaluate(args) -> int:
    scheme = scheme_for_task(args.task)
    if args.model:
        from ..models.serialize import load_model

        corpus = read_corpus(resolve_data_path(args.input))
        classifier = load_model(resolve_data_path(args.model))
        _, predicted = classifier.predict(corpus)
        gold = [inst.label for inst in corpus]
        report = EvaluationReport.from_predictions(gold, predicted, corpus.scheme)
    else:
        gold_by_id = _read_label_csv(args.gold, scheme)
        pred_by_id = _read_label_csv(args.pred, scheme)
        if set(gold_by_id) != set(pred_by_id):
            raise DataFormatError("gold and pred files label different instance ids")
        ids = sorted(gold_by_id)
        report = EvaluationReport.from_predictions(
            [gold_by_id[i] for i in ids], [pred_by_id[i] for i in ids], scheme
        )
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def _cmd_report(args) -> int:
    rows = []
    for input_path in args.inputs:
        record = json.loads(Path(resolve_data_path(input_path)).read_text(encoding="utf-8"))
        report_dict = record["report"]
        # CV run records carry both views; the table row uses the averaged one
        view = report_dict["averaged"] if "averaged" in report_dict else report_dict
        scheme = scheme_for_task(record.get("task", args.task))
        matrix = ConfusionMatrix(scheme, np.asarray(view["confusion"], dtype=np.int64))
        rows.append(
            ResultRow(
                topology=record.get("topology", "?"),
                architecture=record.get("architecture", "?"),
                modification=record.get("modification", "none"),
                report=EvaluationReport(
                    scheme=scheme,
                    matrix=matrix,
                    per_class_accuracy=tuple(view["per_class_accuracy"]),
                    per_class=tuple(view["per_class"]),
                    micro_f1=view["micro_f1"],
                    macro_f1=view["macro_f1"],
                    n_instances=view["n_instances"],
                ),
            )
        )
    text = emit_report(rows, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.out}")
    return 0


def _cmd_fetch(args) -> int:
    path = fetch(args.url, args.dest, args.sha256, overwrite=args.overwrite)
    print(f"verified {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citeclass",
        description="Citation intent and sentiment classification toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    stats = sub.add_parser("stats", help="class distribution and length statistics")
    stats.add_argument("--input", required=True)
    stats.add_argument("--dataset", choices=("scicite", "csc", "export"), default="export")
    stats.add_argument("--split", default="all", help="split tag for scicite inputs")
    stats.add_argument("--bucket-width", type=int, default=25)
    stats.add_argument("--out", help="directory for CSV/JSON outputs (default: print)")
    stats.set_defaults(func=_cmd_stats)

    clean = sub.add_parser("clean", help="two-step cleansing with a removal ledger")
    clean.add_argument("--input", required=True)
    clean.add_argument("--dataset", choices=("csc", "export"), default="csc")
    clean.add_argument("--out", required=True)
    clean.set_defaults(func=_cmd_clean)

    split = sub.add_parser("split", help="fixed-ratio or k-fold assignment export")
    split.add_argument("--input", required=True)
    split.add_argument("--dataset", choices=("scicite", "csc", "export"), default="export")
    split.add_argument("--kind", choices=("fixed", "kfold"), required=True)
    split.add_argument("--ratio", type=float, default=0.7)
    split.add_argument("--k", type=int, default=10)
    split.add_argument("--seed", type=int, default=0)
    split.add_argument("--no-stratify", action="store_true")
    split.add_argument("--out", required=True)
    split.set_defaults(func=_cmd_split)

    for name, func, description in (
        ("train", _cmd_train, "run a fixed-split experiment from a config"),
        ("cv", _cmd_cv, "run a cross-validation experiment from a config"),
    ):
        cmd = sub.add_parser(name, help=description)
        cmd.add_argument("--config", required=True)
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--workers", type=int, default=1)
        cmd.add_argument("--out", default=None, help="override the config output directory")
        cmd.set_defaults(func=func)

    evaluate = sub.add_parser("evaluate", help="score predictions against gold labels")
    evaluate.add_argument("--task", choices=("intent", "sentiment"), required=True)
    evaluate.add_argument("--gold", help="CSV with id,label columns")
    evaluate.add_argument("--pred", help="CSV with id,label columns")
    evaluate.add_argument("--model", help="saved model file (alternative to --gold/--pred)")
    evaluate.add_argument("--input", help="corpus export to score when using --model")
    evaluate.add_argument("--out", help="write the report JSON here as well")
    evaluate.set_defaults(func=_cmd_evaluate)

    report = sub.add_parser("report", help="tabulate one or more run report.json files")
    report.add_argument("--inputs", nargs="+", required=True)
    report.add_argument("--format", choices=("csv", "md", "json"), default="md")
    report.add_argument("--task", choices=("intent", "sentiment"), default="sentiment")
    report.add_argument("--out")
    report.set_defaults(func=_cmd_report)

    fetch_cmd = sub.add_parser("fetch", help="download a dataset file and verify its sha256")
    fetch_cmd.add_argument("--url", required=True)
    fetch_cmd.add_argument("--dest", required=True)
    fetch_cmd.add_argument("--sha256", required=True)
    fetch_cmd.add_argument("--overwrite", action="store_true")
    fetch_cmd.set_defaults(func=_cmd_fetch)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "evaluate" and not args.model and not (args.gold and args.pred):
        parser.error("evaluate needs either --model/--input or --gold/--pred")
    if args.command == "evaluate" and args.model and not args.input:
        parser.error("--model needs --input")
    try:
        return args.func(args)
    except CiteclassError as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        if hasattr(exc, "stage"):
            error["error"]["stage"] = exc.stage
        print(json.dumps(error), file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
