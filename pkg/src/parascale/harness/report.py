"""Report emission: delimited output, Markdown tables, and figures.

The CSV is the machine-readable artifact and is byte-deterministic for a
given report; the Markdown view adds English / non-English roll-ups with
the first row maximum bolded; figures render the same aggregates with
matplotlib for quick visual comparison across strategies.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ..metrics import ENGLISH_ROLLUP, NON_ENGLISH_ROLLUP, QualityReport, ReportCell

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["language", "task", "strategy", "metric", "value", "n", "excluded"]

# Metrics worth charting, in display order.
_FIGURE_METRICS = ["win_delta", "accuracy_delta", "score_delta", "hope", "risk"]


def _format_value(value: float) -> str:
    return format(value, ".10g")


def write_csv(report: QualityReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for cell in report.cells + report.rollups:
            writer.writerow(
                [cell.language, cell.task, cell.strategy, cell.metric, _format_value(cell.value), cell.n, cell.excluded]
            )
    return path


def _markdown_table(rows: list[list[str]], header: list[str], bold_max: bool = True) -> list[str]:
    """Render rows as a Markdown table, bolding the first maximum numeric
    value in each row's value columns."""
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] * len(header)) + "|"]
    for row in rows:
        cells = list(row)
        if bold_max:
            numeric = []
            for i, cell in enumerate(cells[1:], start=1):
                try:
                    numeric.append((i, float(cell)))
                except ValueError:
                    continue
            if numeric:
                best_value = max(v for _, v in numeric)
                for i, v in numeric:
                    if v == best_value:
                        cells[i] = f"**{cells[i]}**"
                        break
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def write_markdown(report: QualityReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# Run report", ""]

    if report.rollups:
        lines += ["## English / non-English roll-ups", ""]
        for task in sorted({c.task for c in report.rollups}):
            for metric in sorted({c.metric for c in report.rollups if c.task == task}):
                block = {
                    (c.language, c.strategy): c
                    for c in report.rollups
                    if c.task == task and c.metric == metric
                }
                strategies = sorted({strategy for _, strategy in block})
                lines += [f"### {task} / {metric}", ""]
                rows = []
                for language in (ENGLISH_ROLLUP, NON_ENGLISH_ROLLUP):
                    if not any((language, s) in block for s in strategies):
                        continue
                    cols = [language]
                    for strategy in strategies:
                        cell = block.get((language, strategy))
                        cols.append(_format_value(cell.value) if cell else "--")
                    rows.append(cols)
                lines += _markdown_table(rows, ["group"] + strategies) + [""]

    lines += ["## Per-language results", ""]
    header = CSV_COLUMNS
    rows = [
        [c.language, c.task, c.strategy, c.metric, _format_value(c.value), str(c.n), str(c.excluded)]
        for c in report.cells
    ]
    lines += _markdown_table(rows, header, bold_max=False) + [""]

    if report.exclusions:
        lines += ["## Excluded prompts", ""]
        lines += [f"- `{pid}`: {reason}" for pid, reason in report.exclusions] + [""]
    for note in report.notes:
        lines.append(f"> {note}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_figures(report: QualityReport, out_dir: str | Path) -> list[Path]:
    """Render one grouped bar chart per (task, metric) from the roll-ups."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    by_key: dict[tuple[str, str], list[ReportCell]] = {}
    for cell in report.rollups:
        if cell.metric in _FIGURE_METRICS:
            by_key.setdefault((cell.task, cell.metric), []).append(cell)
    for (task, metric), cells in sorted(by_key.items()):
        strategies = sorted({c.strategy for c in cells})
        groups = [ENGLISH_ROLLUP, NON_ENGLISH_ROLLUP]
        fig, ax = plt.subplots(figsize=(7, 4))
        width = 0.8 / max(len(groups), 1)
        for gi, group in enumerate(groups):
            values = []
            for strategy in strategies:
                cell = next((c for c in cells if c.language == group and c.strategy == strategy), None)
                values.append(cell.value if cell else 0.0)
            positions = [si + gi * width for si in range(len(strategies))]
            ax.bar(positions, values, width=width, label=group)
        ax.set_xticks([si + width / 2 for si in range(len(strategies))])
        ax.set_xticklabels(strategies, rotation=20, ha="right")
        ax.set_ylabel(metric)
        ax.set_title(f"{task}: {metric} by strategy")
        ax.axhline(0.0, color="black", linewidth=0.8)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"report_{task}_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    logger.info("wrote %d figure(s) to %s", len(written), out_dir)
    return written


def emit_report(
    report: QualityReport,
    out_dir: str | Path,
    formats: tuple[str, ...] = ("csv", "md"),
    figures: bool = True,
) -> dict[str, list[Path]]:
    """Write the report artifacts into out_dir; returns paths by kind."""
    out_dir = Path(out_dir)
    written: dict[str, list[Path]] = {"csv": [], "md": [], "figures": []}
    if "csv" in formats:
        written["csv"].append(write_csv(report, out_dir / "report.csv"))
    if "md" in formats:
        written["md"].append(write_markdown(report, out_dir / "report.md"))
    if figures:
        written["figures"] = write_figures(report, out_dir)
    return written
