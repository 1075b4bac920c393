"""Command-line interface."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from ..metrics import PromptMetrics, aggregate_report
from ..types import Strategy
from .config import load_config
from .report import emit_report
from .runner import read_records, run, sample_pools, select_from_pools
from .scan import scan_pool_sizes, write_scan_outputs

logger = logging.getLogger(__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Parallel test-time scaling: sample pools, select, evaluate."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--limit", type=int, default=None, help="Process at most this many pending prompts.")
@click.option("--figures/--no-figures", default=True, help="Render report figures.")
def run_cmd(config_path: str, limit: int | None, figures: bool) -> None:
    """Run the full pipeline: sample, select, score, report."""
    config = load_config(config_path)
    report = run(config, limit=limit)
    written = emit_report(report, config.run_dir(), figures=figures)
    for kind, paths in written.items():
        for path in paths:
            click.echo(f"{kind}: {path}")
    for note in report.notes:
        click.echo(f"note: {note}", err=True)


@main.command("sample")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--limit", type=int, default=None)
def sample_cmd(config_path: str, limit: int | None) -> None:
    """Assemble and persist sample pools without selecting."""
    config = load_config(config_path)
    pools_dir = sample_pools(config, limit=limit)
    click.echo(f"pools: {pools_dir}")


@main.command("select")
@click.option("--pools", "pools_dir", required=True, type=click.Path(exists=True))
@click.option("--strategy", required=True, type=click.Choice([s.value for s in Strategy]))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def select_cmd(pools_dir: str, strategy: str, config_path: str) -> None:
    """Run one selection strategy over previously sampled pools."""
    config = load_config(config_path)
    out = select_from_pools(config, pools_dir, Strategy(strategy))
    click.echo(f"selections: {out}")


@main.command("report")
@click.option("--run", "run_id", required=True)
@click.option("--output-dir", default="runs", type=click.Path())
@click.option("--format", "formats", default="csv,md", help="Comma-separated: csv, md.")
@click.option("--figures/--no-figures", default=True)
def report_cmd(run_id: str, output_dir: str, formats: str, figures: bool) -> None:
    """Re-emit reports from a finished run's per-prompt records."""
    run_dir = Path(output_dir) / run_id
    records_path = run_dir / "records.jsonl"
    if not records_path.exists():
        click.echo(f"no records at {records_path}", err=True)
        sys.exit(1)
    rows: list[PromptMetrics] = []
    for record in read_records(records_path):
        rows.extend(PromptMetrics.from_dict(m) for m in record.get("metrics", []))
    report = aggregate_report(rows)
    wanted = tuple(f.strip() for f in formats.split(",") if f.strip())
    written = emit_report(report, run_dir, formats=wanted, figures=figures)
    for kind, paths in written.items():
        for path in paths:
            click.echo(f"{kind}: {path}")


@main.command("scan")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--sizes", required=True, help="Comma-separated ascending pool sizes, e.g. 1,3,5,10.")
@click.option("--limit", type=int, default=None)
@click.option("--figures/--no-figures", default=True)
def scan_cmd(config_path: str, sizes: str, limit: int | None, figures: bool) -> None:
    """Scaling study: metric versus pool size with prefix-stable pools."""
    config = load_config(config_path)
    size_list = [int(s) for s in sizes.split(",") if s.strip()]
    cells = scan_pool_sizes(config, size_list, limit=limit)
    written = write_scan_outputs(cells, config.run_dir(), figures=figures)
    for kind, path in written.items():
        click.echo(f"{kind}: {path}")
    click.echo(json.dumps([cell.__dict__ for cell in cells[:10]], indent=2))


if __name__ == "__main__":
    main()
