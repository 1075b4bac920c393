"""Pool-size scaling scans.

Slot seeds are seed + slot_index, so the pool at a smaller N is an exact
prefix of the pool at a larger N; the shared response cache therefore
pays for each slot once across the whole scan.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ..backends.base import CallTally
from ..errors import InvalidConfig
from ..sampling import assemble_pool, extend_evidence, with_pool_size
from ..selection import run_strategy
from ..types import Strategy
from .config import RunConfig, build_runtime
from .datasets import load_dataset
from .runner import greedy_baseline_sample

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ScanCell:
    n: int
    strategy: str
    metric: str
    value: float


def scan_pool_sizes(config: RunConfig, sizes: list[int], limit: int | None = None) -> list[ScanCell]:
    """Metric versus pool size for every configured strategy.

    Reports the mean best-of-pool score (the selection ceiling) per size
    plus each strategy's mean chosen-score delta against greedy.  Requires
    a configured scorer.
    """
    if sorted(sizes) != list(sizes):
        raise InvalidConfig("sizes must be ascending")
    rt = build_runtime(config)
    if rt.scorer is None:
        raise InvalidConfig("scan needs a configured scorer")
    prompts = load_dataset(config.dataset_path)
    if limit is not None:
        prompts = prompts[:limit]

    sums: dict[tuple[int, str, str], float] = {}
    counts: dict[tuple[int, str, str], int] = {}

    def accumulate(n: int, strategy: str, metric: str, value: float) -> None:
        key = (n, strategy, metric)
        sums[key] = sums.get(key, 0.0) + value
        counts[key] = counts.get(key, 0) + 1

    for prompt in prompts:
        for n in sizes:
            plan = with_pool_size(config.plan, n)
            tally = CallTally()
            pool = assemble_pool(rt.generator, prompt, plan, tally=tally)
            if Strategy.XMBR in config.strategies and plan.evidence_m >= 1 and len(pool.hypotheses) > 0:
                pool = extend_evidence(rt.generator, prompt, pool, plan, tally=tally)
            greedy = greedy_baseline_sample(rt, prompt, pool, tally)
            scores = [rt.scorer.score(prompt, h) for h in pool.hypotheses]
            greedy_score = rt.scorer.score(prompt, greedy)
            accumulate(n, "pool", "best_of_pool_score", max(scores))
            for strategy in config.strategies:
                outcome = run_strategy(
                    strategy,
                    prompt,
                    pool,
                    judge_backend=rt.judge,
                    reward_backend=rt.reward,
                    templates=rt.templates,
                    mode=config.pair_mode,
                    length_normalized=config.length_normalized_likelihood,
                    chops_checklist=config.chops_checklist,
                    context_budget_tokens=config.context_budget_tokens,
                )
                chosen_score = scores[outcome.chosen_index]
                accumulate(n, strategy.value, "score_delta", chosen_score - greedy_score)

    cells = [
        ScanCell(n=n, strategy=strategy, metric=metric, value=sums[(n, strategy, metric)] / counts[(n, strategy, metric)])
        for (n, strategy, metric) in sorted(sums)
    ]
    return cells


def write_scan_outputs(cells: list[ScanCell], out_dir: str | Path, figures: bool = True) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "scan.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "strategy", "metric", "value"])
        for cell in cells:
            writer.writerow([cell.n, cell.strategy, cell.metric, format(cell.value, ".10g")])
    written = {"csv": csv_path}
    if figures:
        fig, ax = plt.subplots(figsize=(7, 4))
        series: dict[tuple[str, str], list[tuple[int, float]]] = {}
        for cell in cells:
            series.setdefault((cell.strategy, cell.metric), []).append((cell.n, cell.value))
        for (strategy, metric), points in sorted(series.items()):
            points.sort()
            ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=f"{strategy}:{metric}")
        ax.set_xlabel("pool size N")
        ax.set_ylabel("metric value")
        ax.set_title("Scaling with pool size")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig_path = out_dir / "scan.png"
        fig.savefig(fig_path, dpi=120)
        plt.close(fig)
        written["figure"] = fig_path
    return written
