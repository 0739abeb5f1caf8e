"""Results-table and statistics emission: markdown, CSV, and JSON.

Markdown tables round to two decimals (percent scale) for reading; CSV
and JSON keep full precision.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from ..corpus import DistributionStats, LengthStats, percent
from ..metrics import EvaluationReport

FORMATS = ("csv", "md", "json")


@dataclass(frozen=True)
class ResultRow:
    """One results-table row: where the numbers came from plus the numbers."""

    topology: str
    architecture: str
    modification: str
    report: EvaluationReport

    def to_record(self) -> dict:
        rec = {
            "topology": self.topology,
            "architecture": self.architecture,
            "modification": self.modification,
        }
        for name, acc in zip(self.report.scheme.labels, self.report.per_class_accuracy):
            rec[f"acc_{name}"] = acc
        rec["micro_f1"] = self.report.micro_f1
        rec["macro_f1"] = self.report.macro_f1
        rec["n_instances"] = self.report.n_instances
        return rec


def _sorted_rows(rows: list[ResultRow]) -> list[ResultRow]:
    if not rows:
        raise ValueError("no reports to emit")
    scheme = rows[0].report.scheme
    for row in rows[1:]:
        if row.report.scheme != scheme:
            raise ValueError("cannot tabulate reports over different label schemes")
    return sorted(rows, key=lambda r: (r.topology, r.architecture, r.modification))


def to_markdown(rows: list[ResultRow]) -> str:
    rows = _sorted_rows(rows)
    labels = rows[0].report.scheme.labels
    header = ["Topology", "Architecture", "Modification"]
    header += [f"{name} (%)" for name in labels] + ["micro-f1", "macro-f1"]
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    for row in rows:
        cells = [row.topology, row.architecture, row.modification]
        for acc in row.report.per_class_accuracy:
            cells.append("*" if acc is None else f"{percent(acc):.2f}")
        cells.append(f"{percent(row.report.micro_f1):.2f}")
        cells.append(f"{percent(row.report.macro_f1):.2f}")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def to_csv_text(rows: list[ResultRow]) -> str:
    rows = _sorted_rows(rows)
    records = [row.to_record() for row in rows]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(records[0].keys()))
    writer.writeheader()
    writer.writerows(records)
    return buf.getvalue()


def to_json_text(rows: list[ResultRow]) -> str:
    rows = _sorted_rows(rows)
    return json.dumps([row.to_record() for row in rows], indent=2) + "\n"


def emit_report(rows: list[ResultRow], fmt: str, path: str | Path | None = None) -> str:
    """Render the results table; optionally write it to a file."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {FORMATS}")
    if fmt == "md":
        text = to_markdown(rows)
    elif fmt == "csv":
        text = to_csv_text(rows)
    else:
        text = to_json_text(rows)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return text


def distribution_csv(stats: DistributionStats) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["class", "count", "percentage"])
    for row in stats.rows():
        writer.writerow([row["class"], row["count"], f"{percent(row['percentage']):.2f}"])
    writer.writerow(["total", stats.total, "100.00"])
    return buf.getvalue()


def length_stats_csv(stats: LengthStats) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["class", "mean_tokens", "mean_chars"])
    for name, mt, mc in zip(stats.scheme.labels, stats.mean_tokens, stats.mean_chars):
        writer.writerow([name, "" if mt is None else mt, "" if mc is None else mc])
    return buf.getvalue()


def length_stats_json(stats: LengthStats) -> str:
    return json.dumps(stats.to_plot_json(), indent=2) + "\n"
