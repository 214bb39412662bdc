"""Canonical JSON and aligned-text rendering of reports."""

from __future__ import annotations

import json

from .metrics import REPORT_COLUMNS, MetricReport
from .similarity import SimilarityTable


def canonical_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _metric_table(report: MetricReport, label: str = "") -> str:
    row = report.row()
    cells = [f"{row[c]:.2f}" if c != "PPL" else
             ("-" if row[c] is None else f"{row[c]:.4f}") for c in REPORT_COLUMNS]
    header = ["Model"] + list(REPORT_COLUMNS)
    body = [label or "-"] + cells
    widths = [max(len(h), len(b)) for h, b in zip(header, body)]
    fmt = "  ".join(f"{{:>{w}}}" for w in widths)
    return fmt.format(*header) + "\n" + fmt.format(*body) + "\n"


def _similarity_table(table: SimilarityTable) -> str:
    data = table.to_json()
    cols = data["columns"]
    lines = [f"{'Domain':<12}" + "".join(f"{c:>8}" for c in cols)]
    for row in data["rows"]:
        lines.append(f"{row['domain']:<12}" + "".join(f"{row[c]:>8.2f}" for c in cols))
    return "\n".join(lines) + "\n"


def render_report(record, fmt: str = "json", label: str = "") -> str:
    """Render a metric report, similarity table or plain record."""
    if fmt not in ("json", "table"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(record, MetricReport):
        return canonical_json(record.to_json()) if fmt == "json" else _metric_table(record, label)
    if isinstance(record, SimilarityTable):
        return canonical_json(record.to_json()) if fmt == "json" else _similarity_table(record)
    if fmt == "table":
        return "\n".join(f"{k}: {v}" for k, v in sorted(record.items())) + "\n"
    return canonical_json(record)
