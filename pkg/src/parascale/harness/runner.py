"""End-to-end run orchestration with resume and fault isolation.

Every prompt is processed independently: its pool is assembled once, every
requested strategy selects from that same pool, selections are scored, and
one result line is appended to records.jsonl.  A resumed run skips prompts
that already have a result line; everything else replays through the
response cache, so no backend call is ever repeated.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from ..backends.base import CallTally, Verdict
from ..backends.judging import judge_pairwise
from ..errors import ParascaleError, ZeroGreedyScore
from ..metrics import (
    PromptMetrics,
    QualityReport,
    aggregate_report,
    exact_match,
    extract_final_answer,
    pool_diagnostics,
    score_pool,
)
from ..sampling import assemble_pool, extend_evidence
from ..selection import run_strategy
from ..types import (
    CallLedger,
    DecodeParams,
    PromptRecord,
    Provenance,
    Sample,
    SamplePool,
    Strategy,
    TaskKind,
)
from .config import RunConfig, Runtime, build_runtime
from .datasets import load_baseline_outputs, load_dataset

logger = logging.getLogger(__name__)


class PromptStatus(Enum):
    PENDING = "pending"
    SAMPLED = "sampled"
    SELECTED = "selected"
    SCORED = "scored"
    FAILED = "failed"


@dataclass
class RunLedger:
    """Per-prompt status plus the aggregated call ledger for the run."""

    statuses: dict[str, str] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    totals: CallLedger = field(default_factory=CallLedger)
    started_at: float = field(default_factory=time.time)
    finished_at: float | None = None

    def to_dict(self) -> dict:
        return {
            "statuses": self.statuses,
            "failures": self.failures,
            "totals": self.totals.to_dict(),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


def read_records(path: Path, repair: bool = False) -> list[dict]:
    """Load result lines, tolerating a torn final line from a crash.

    With repair=True a torn final line is also removed from the file, so
    subsequent appends produce a clean record stream again.
    """
    if not path.exists():
        return []
    records = []
    torn = False
    lines = path.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except ValueError:
            if i == len(lines) - 1:
                logger.warning("dropping torn final record line in %s", path)
                torn = True
                continue
            raise
    if torn and repair:
        path.write_text("".join(json.dumps(r, ensure_ascii=True) + "\n" for r in records), encoding="utf-8")
    return records


def greedy_baseline_sample(rt: Runtime, prompt: PromptRecord, pool: SamplePool, tally: CallTally) -> Sample:
    greedy = pool.greedy_hypothesis
    if greedy is not None:
        return greedy
    params = DecodeParams(
        temperature=0.0, min_p=0.0, max_tokens=rt.config.plan.max_tokens, seed=rt.config.plan.seed
    )
    return rt.generator.generate(prompt, params, n=1, tally=tally)[0]


def _judged_win(rt: Runtime, prompt: PromptRecord, ours: str, theirs: str, tally: CallTally) -> float:
    """Win value of ours vs theirs: 1 win, 0.5 tie, 0 loss.

    Identical texts tie by definition and cost no judge call.
    """
    if ours == theirs:
        return 0.5
    pref = judge_pairwise(rt.eval_judge, prompt.text, ours, theirs, rt.templates, tally=tally)
    if pref.verdict is Verdict.FIRST_WINS:
        return 1.0
    if pref.verdict is Verdict.SECOND_WINS:
        return 0.0
    return 0.5


def _process_prompt(rt: Runtime, prompt: PromptRecord) -> dict:
    config = rt.config
    prompt_tally = CallTally()

    pool = assemble_pool(rt.generator, prompt, config.plan, tally=prompt_tally)
    if Strategy.XMBR in config.strategies and config.plan.evidence_m >= 1:
        pool = extend_evidence(rt.generator, prompt, pool, config.plan, tally=prompt_tally)
    greedy = greedy_baseline_sample(rt, prompt, pool, prompt_tally)

    metrics_rows: list[PromptMetrics] = []
    diagnostics = None
    hypothesis_scores: list[float] | None = None
    greedy_score: float | None = None
    pool_excluded = False
    exclusion_reason = None
    if rt.scorer is not None:
        hypothesis_scores, greedy_score = score_pool(pool, rt.scorer, prompt, greedy_sample=greedy)
        try:
            diagnostics, _ = pool_diagnostics(
                pool, rt.scorer, prompt, greedy_sample=greedy, precomputed=(hypothesis_scores, greedy_score)
            )
        except ZeroGreedyScore as exc:
            # Relative pool gains are undefined; absolute per-strategy
            # metrics below remain valid.
            pool_excluded = True
            exclusion_reason = str(exc)
            logger.info("prompt %s excluded from hope/risk aggregates: %s", prompt.id, exc)
    base = dict(prompt_id=prompt.id, language=prompt.language.code, task=prompt.task.value)
    pool_row = PromptMetrics(**base, strategy="pool", excluded=pool_excluded, exclusion_reason=exclusion_reason)
    if diagnostics is not None:
        pool_row.values.update(hope=diagnostics.hope, risk=diagnostics.risk)
    metrics_rows.append(pool_row)

    baseline_text: str | None = None
    greedy_win: float | None = None
    if config.baseline == "external":
        baseline_text = rt.baseline_texts.get(prompt.id)
        if baseline_text is None:
            raise ParascaleError(f"no external baseline output for prompt {prompt.id!r}")
        if prompt.task is TaskKind.OPEN_ENDED and rt.eval_judge is not None:
            greedy_win = _judged_win(rt, prompt, greedy.text, baseline_text, prompt_tally)
    else:
        baseline_text = greedy.text
        greedy_win = 0.5  # greedy vs itself is a tie by definition

    greedy_accuracy = None
    if prompt.task is TaskKind.MATH_REASONING:
        greedy_accuracy = float(exact_match(extract_final_answer(greedy.text), prompt.answer))

    selections = []
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
        chosen = pool.hypotheses[outcome.chosen_index]
        row = PromptMetrics(**base, strategy=strategy.value)
        row.values["chose_greedy"] = 1.0 if chosen.provenance is Provenance.GREEDY else 0.0
        if hypothesis_scores is not None and greedy_score is not None:
            row.values["chosen_score"] = hypothesis_scores[outcome.chosen_index]
            row.values["score_delta"] = hypothesis_scores[outcome.chosen_index] - greedy_score
        if prompt.task is TaskKind.OPEN_ENDED and rt.eval_judge is not None and greedy_win is not None:
            win = _judged_win(rt, prompt, chosen.text, baseline_text, prompt_tally)
            row.values["win"] = win
            row.values["win_delta"] = win - greedy_win
        if prompt.task is TaskKind.MATH_REASONING:
            accuracy = float(exact_match(extract_final_answer(chosen.text), prompt.answer))
            row.values["accuracy"] = accuracy
            row.values["accuracy_delta"] = accuracy - greedy_accuracy
        metrics_rows.append(row)
        selections.append(
            {
                "strategy": strategy.value,
                "chosen_index": outcome.chosen_index,
                "chosen_text": chosen.text,
                "scores": list(outcome.per_candidate_score),
                "ledger": outcome.ledger.to_dict(),
            }
        )

    total = prompt_tally.freeze()
    for sel in selections:
        total = total + CallLedger.from_dict(sel["ledger"])
    return {
        "id": prompt.id,
        "language": prompt.language.code,
        "task": prompt.task.value,
        "selections": selections,
        "diagnostics": diagnostics.to_dict() if diagnostics is not None else None,
        "ledger": total.to_dict(),
        "metrics": [m.to_dict() for m in metrics_rows],
    }


def run(config: RunConfig, limit: int | None = None) -> QualityReport:
    """Execute the full pipeline; idempotent under resume.

    limit caps how many pending prompts are processed this invocation,
    which doubles as a crash stand-in for resume tests.  Failed prompts are
    recorded and never abort the run.
    """
    rt = build_runtime(config)
    if config.baseline == "external":
        rt.baseline_texts = load_baseline_outputs(config.baseline_path)
    prompts = load_dataset(config.dataset_path)

    run_dir = config.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    records_path = run_dir / "records.jsonl"
    existing = read_records(records_path, repair=True)
    done_ids = {r["id"] for r in existing}

    ledger = RunLedger()
    for record in existing:
        ledger.statuses[record["id"]] = (
            PromptStatus.FAILED.value if record.get("failed") else PromptStatus.SCORED.value
        )
        if record.get("failed"):
            ledger.failures[record["id"]] = record["failed"]

    pending = [p for p in prompts if p.id not in done_ids]
    if limit is not None:
        pending = pending[:limit]

    write_lock = threading.Lock()
    new_records: dict[str, dict] = {}

    def handle(prompt: PromptRecord) -> None:
        try:
            record = _process_prompt(rt, prompt)
            status = PromptStatus.SCORED
        except Exception as exc:  # noqa: BLE001 - per-prompt fault isolation
            logger.warning("prompt %s failed: %s", prompt.id, exc)
            record = {
                "id": prompt.id,
                "language": prompt.language.code,
                "task": prompt.task.value,
                "failed": f"{type(exc).__name__}: {exc}",
                "selections": [],
                "metrics": [],
            }
            status = PromptStatus.FAILED
        with write_lock:
            with records_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=True) + "\n")
            new_records[prompt.id] = record
            ledger.statuses[prompt.id] = status.value
            if status is PromptStatus.FAILED:
                ledger.failures[prompt.id] = record["failed"]

    if config.concurrency > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            list(pool.map(handle, pending))
    else:
        for prompt in pending:
            handle(prompt)

    all_records = existing + [new_records[p.id] for p in pending if p.id in new_records]
    totals = CallLedger()
    rows: list[PromptMetrics] = []
    for record in all_records:
        if record.get("ledger"):
            totals = totals + CallLedger.from_dict(record["ledger"])
        rows.extend(PromptMetrics.from_dict(m) for m in record.get("metrics", []))
    ledger.totals = totals
    ledger.finished_at = time.time()
    (run_dir / "run_ledger.json").write_text(json.dumps(ledger.to_dict(), indent=2), encoding="utf-8")

    report = aggregate_report(rows)
    failed = [(pid, reason) for pid, reason in sorted(ledger.failures.items())]
    if failed:
        report.notes.append(f"{len(failed)} prompt(s) failed and are excluded: " + ", ".join(p for p, _ in failed))
    return report


def sample_pools(config: RunConfig, limit: int | None = None) -> Path:
    """Assemble and persist pools only (no selection); returns the pools dir."""
    rt = build_runtime(config)
    prompts = load_dataset(config.dataset_path)
    if limit is not None:
        prompts = prompts[:limit]
    pools_dir = config.run_dir() / "pools"
    pools_dir.mkdir(parents=True, exist_ok=True)
    for prompt in prompts:
        out = pools_dir / f"{prompt.id}.json"
        if out.exists():
            continue
        tally = CallTally()
        pool = assemble_pool(rt.generator, prompt, config.plan, tally=tally)
        if config.plan.evidence_m >= 1 and Strategy.XMBR in config.strategies:
            pool = extend_evidence(rt.generator, prompt, pool, config.plan, tally=tally)
        out.write_text(json.dumps(pool.to_dict(), ensure_ascii=True, indent=2), encoding="utf-8")
    return pools_dir


def select_from_pools(config: RunConfig, pools_dir: str | Path, strategy: Strategy) -> Path:
    """Run one strategy over previously sampled pools; writes selections.jsonl."""
    rt = build_runtime(config)
    prompts = {p.id: p for p in load_dataset(config.dataset_path)}
    out_path = config.run_dir() / f"selections_{strategy.value}.jsonl"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        for pool_file in sorted(Path(pools_dir).glob("*.json")):
            pool = SamplePool.from_dict(json.loads(pool_file.read_text(encoding="utf-8")))
            prompt = prompts.get(pool.prompt_id)
            if prompt is None:
                logger.warning("pool %s has no matching prompt; skipped", pool_file.name)
                continue
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
            fh.write(
                json.dumps(
                    {
                        "id": pool.prompt_id,
                        "strategy": strategy.value,
                        "chosen_index": outcome.chosen_index,
                        "chosen_text": pool.hypotheses[outcome.chosen_index].text,
                        "scores": list(outcome.per_candidate_score),
                        "ledger": outcome.ledger.to_dict(),
                    },
                    ensure_ascii=True,
                )
                + "\n"
            )
    return out_path
