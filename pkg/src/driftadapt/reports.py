"""Machine-readable run reports and the cross-report comparison table.

A report is one versioned JSON document: config echo, per-method
results, timings. Serialization round-trips exactly (parse(serialize(r))
== r), so reports can serve as diffable goldens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError, DataError

REPORT_FORMAT = "driftadapt-report/1"


@dataclass
class Report:
    config: dict
    results: dict
    timings: dict = field(default_factory=dict)
    version: str = REPORT_FORMAT

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "config": self.config,
                "results": self.results,
                "timings": self.timings,
            },
            indent=2,
        )


def report_from_json(text: str) -> Report:
    doc = json.loads(text)
    if doc.get("version") != REPORT_FORMAT:
        raise DataError(f"unsupported report version: {doc.get('version')!r}")
    return Report(
        config=doc["config"],
        results=doc["results"],
        timings=doc.get("timings", {}),
        version=doc["version"],
    )


def load_report(path) -> Report:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return report_from_json(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read report {path}: {exc}") from exc


def save_report(report: Report, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")


def _method_means(report: Report) -> dict[str, tuple[float, float | None]]:
    """method -> (mean outcome AUC, ci halfwidth) cells for comparison."""
    out: dict[str, tuple[float, float | None]] = {}
    exp = report.results.get("experiment")
    if exp:
        for method, res in exp["per_method"].items():
            out[method] = (res["avg"]["mean"], res["avg"]["ci"])
    det = report.results.get("detect")
    if det:
        out["adversarial_auc"] = (det["auc_mean"], det.get("auc_ci"))
    return out


def compare(reports: list[Report]) -> dict:
    """Aligned method-by-dataset table with per-dataset winner flags.

    Reports must share the schema version. Cells missing from a report
    stay None. The winner of a dataset is the outcome method with the
    highest mean AUC (detect rows never win)."""
    if not reports:
        raise ConfigError("compare needs at least one report")
    versions = {r.version for r in reports}
    if len(versions) != 1:
        raise ConfigError(f"reports mix schema versions: {sorted(versions)}")

    datasets = []
    cells: dict[str, dict[str, tuple[float, float | None]]] = {}
    for r in reports:
        name = r.config.get("dataset_name") or r.config.get("train") or "dataset"
        if name in cells:
            suffix = 2
            while f"{name}#{suffix}" in cells:
                suffix += 1
            name = f"{name}#{suffix}"
        datasets.append(name)
        cells[name] = _method_means(r)

    methods: list[str] = []
    for name in datasets:
        for m in cells[name]:
            if m not in methods:
                methods.append(m)

    winners: dict[str, str | None] = {}
    for name in datasets:
        best, best_mean = None, -1.0
        for m, (mean, _) in cells[name].items():
            if m == "adversarial_auc":
                continue
            if mean is not None and mean > best_mean:
                best, best_mean = m, mean
        winners[name] = best

    return {
        "version": REPORT_FORMAT,
        "datasets": datasets,
        "methods": methods,
        "cells": {
            name: {m: list(v) for m, v in cells[name].items()}
            for name in datasets
        },
        "winners": winners,
    }


def format_comparison(table: dict) -> str:
    """Human-readable aligned text table for the comparison result."""
    datasets, methods = table["datasets"], table["methods"]
    col_w = {name: max(len(name), 18) for name in datasets}
    lines = []
    header = "method".ljust(24) + "".join(
        name.rjust(col_w[name] + 2) for name in datasets
    )
    lines.append(header)
    lines.append("-" * len(header))
    for m in methods:
        row = m.ljust(24)
        for name in datasets:
            cell = table["cells"][name].get(m)
            if cell is None:
                text = "-"
            else:
                mean, ci = cell
                text = f"{100 * mean:.2f}" if ci is None else \
                    f"{100 * mean:.2f} +/- {100 * ci:.2f}"
                if table["winners"].get(name) == m:
                    text += " *"
            row += text.rjust(col_w[name] + 2)
        lines.append(row)
    lines.append("(* = best outcome method per dataset; values in % AUC)")
    return "\n".join(lines)
