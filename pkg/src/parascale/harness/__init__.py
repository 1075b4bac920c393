"""Run orchestration: configuration, datasets, runner, reporting, scans."""

from .config import RunConfig, Runtime, build_runtime, load_config, parse_config, validate_config
from .datasets import load_baseline_outputs, load_dataset
from .report import emit_report, write_csv, write_figures, write_markdown
from .runner import RunLedger, run, sample_pools, select_from_pools
from .scan import ScanCell, scan_pool_sizes, write_scan_outputs

__all__ = [
    "RunConfig",
    "Runtime",
    "build_runtime",
    "load_config",
    "parse_config",
    "validate_config",
    "load_baseline_outputs",
    "load_dataset",
    "emit_report",
    "write_csv",
    "write_figures",
    "write_markdown",
    "RunLedger",
    "run",
    "sample_pools",
    "select_from_pools",
    "ScanCell",
    "scan_pool_sizes",
    "write_scan_outputs",
]
