"""Quality scoring, pool diagnostics, task evaluation, and aggregation.

Pool diagnostics express the upside and downside of sampling as relative
changes against the greedy output's score: hope = (best - greedy) / greedy
and risk = (worst - greedy) / greedy.  Prompts whose greedy score is zero
are excluded from aggregates and surfaced in reports rather than floored.
"""

from __future__ import annotations

import json
import logging
import re
import subprocess
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum

from .backends.judging import reward_score
from .backends.synthetic import hidden_quality
from .errors import EmptyRecords, ZeroGreedyScore
from .types import PromptRecord, Sample, SamplePool

logger = logging.getLogger(__name__)

# Metrics whose aggregate values are reported as percentages.
PERCENT_METRICS = {"hope", "risk"}


# --- scorers -----------------------------------------------------------------


class RewardBackedScorer:
    """Scores samples with the reward backend."""

    kind = "reward_backed"

    def __init__(self, reward_backend, tally=None):
        self._backend = reward_backend
        self._tally = tally

    def score(self, prompt: PromptRecord, sample: Sample) -> float:
        return reward_score(self._backend, prompt.text, sample.text, tally=self._tally)


class ExactMatchScorer:
    """1.0 when the extracted final answer matches the gold answer, else 0.0."""

    kind = "exact_match"

    def __init__(self, markers: tuple[str, ...] | None = None):
        self._markers = markers

    def score(self, prompt: PromptRecord, sample: Sample) -> float:
        if prompt.answer is None:
            raise ValueError(f"prompt {prompt.id!r} has no gold answer to match against")
        extracted = (
            extract_final_answer(sample.text, markers=self._markers)
            if self._markers is not None
            else extract_final_answer(sample.text)
        )
        return float(exact_match(extracted, prompt.answer))


class SyntheticOracleScorer:
    """Reads back the hidden quality scalar of synthetic samples."""

    kind = "synthetic_oracle"

    def score(self, prompt: PromptRecord, sample: Sample) -> float:
        return hidden_quality(sample.text)


class PluginScorer:
    """External reference-based scorer invoked over a line protocol.

    The plugin reads one JSON object per line from stdin
    ({id, source, hypothesis, reference}) and writes one per line to stdout
    ({id, score}).
    """

    kind = "reference_plugin"

    def __init__(self, command: list[str] | str, timeout_s: float = 120.0):
        self._command = command.split() if isinstance(command, str) else list(command)
        self._timeout_s = timeout_s

    def score_batch(self, items: list[tuple[PromptRecord, Sample]]) -> list[float]:
        lines = []
        for i, (prompt, sample) in enumerate(items):
            lines.append(
                json.dumps(
                    {
                        "id": str(i),
                        "source": prompt.text,
                        "hypothesis": sample.text,
                        "reference": prompt.reference or "",
                    },
                    ensure_ascii=True,
                )
            )
        proc = subprocess.run(
            self._command,
            input="\n".join(lines) + "\n",
            capture_output=True,
            text=True,
            timeout=self._timeout_s,
            check=True,
        )
        by_id: dict[str, float] = {}
        for line in proc.stdout.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            by_id[str(obj["id"])] = float(obj["score"])
        return [by_id[str(i)] for i in range(len(items))]

    def score(self, prompt: PromptRecord, sample: Sample) -> float:
        return self.score_batch([(prompt, sample)])[0]


# --- pool diagnostics --------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PoolDiagnostics:
    greedy_score: float
    best_score: float
    worst_score: float
    hope: float
    risk: float

    def __post_init__(self) -> None:
        if self.best_score < self.worst_score:
            raise ValueError("best_score must be >= worst_score")
        if self.hope < self.risk:
            raise ValueError("hope must be >= risk")

    def to_dict(self) -> dict[str, float]:
        return {
            "greedy_score": self.greedy_score,
            "best_score": self.best_score,
            "worst_score": self.worst_score,
            "hope": self.hope,
            "risk": self.risk,
        }


def score_pool(
    pool: SamplePool, scorer, prompt: PromptRecord, greedy_sample: Sample | None = None
) -> tuple[list[float], float]:
    """Score every hypothesis once; returns (scores, greedy_score).

    greedy_sample defaults to the pool's greedy hypothesis and is scored
    separately only when it is not already in the pool.
    """
    greedy = greedy_sample or pool.greedy_hypothesis
    if greedy is None:
        raise ValueError("pool has no greedy hypothesis and none was provided")
    scores = [scorer.score(prompt, h) for h in pool.hypotheses]
    try:
        greedy_score = scores[pool.hypotheses.index(greedy)]
    except ValueError:
        greedy_score = scorer.score(prompt, greedy)
    return scores, greedy_score


def pool_diagnostics(
    pool: SamplePool,
    scorer,
    prompt: PromptRecord,
    greedy_sample: Sample | None = None,
    precomputed: tuple[list[float], float] | None = None,
) -> tuple[PoolDiagnostics, list[float]]:
    """Compute hope/risk against greedy, scoring each hypothesis once.

    Pass precomputed=(scores, greedy_score) to reuse scores obtained via
    score_pool.  Returns the diagnostics plus the per-hypothesis scores.
    """
    scores, greedy_score = precomputed or score_pool(pool, scorer, prompt, greedy_sample)
    if greedy_score == 0:
        raise ZeroGreedyScore(f"prompt {prompt.id!r}: greedy score is 0, relative gains undefined")
    best, worst = max(scores), min(scores)
    diag = PoolDiagnostics(
        greedy_score=greedy_score,
        best_score=best,
        worst_score=worst,
        hope=(best - greedy_score) / greedy_score,
        risk=(worst - greedy_score) / greedy_score,
    )
    return diag, scores


# --- final answer extraction and exact match ---------------------------------

DEFAULT_ANSWER_MARKERS = ("answer is", "####")

_NUMBER_RE = re.compile(r"[-+]?[\$€£¥]?\d[\d,]*(?:\.\d+)?")
_CURRENCY_CHARS = "$€£¥"


def _clean_number(token: str) -> str:
    token = token.strip().lstrip("+")
    sign = ""
    if token.startswith("-"):
        sign, token = "-", token[1:]
    token = token.lstrip(_CURRENCY_CHARS)
    token = token.replace(",", "")
    token = token.rstrip(".")
    return sign + token


def _canonical_number(text: str) -> str | None:
    try:
        dec = Decimal(text)
    except (InvalidOperation, ValueError):
        return None
    return format(dec.normalize(), "f")


def extract_final_answer(text: str, markers: tuple[str, ...] = DEFAULT_ANSWER_MARKERS) -> str:
    """Pull the final numeric answer out of a step-by-step solution.

    Prefers the first number after the last occurrence of any marker,
    falling back to the last number anywhere.  Currency symbols, thousands
    separators, and trailing punctuation are stripped.  Returns "" when no
    number is present.
    """
    lowered = text.lower()
    search_from = -1
    for marker in markers:
        pos = lowered.rfind(marker.lower())
        if pos >= 0:
            search_from = max(search_from, pos + len(marker))
    region = text[search_from:] if search_from >= 0 else None
    match = _NUMBER_RE.search(region) if region is not None else None
    if match is None:
        matches = _NUMBER_RE.findall(text)
        if not matches:
            return ""
        token = matches[-1]
    else:
        token = match.group(0)
    cleaned = _clean_number(token)
    canonical = _canonical_number(cleaned)
    return canonical if canonical is not None else cleaned


def exact_match(candidate_answer: str, gold_answer: str) -> int:
    """1 iff the answers agree after normalization; numeric values compare
    by value so 42.0 matches 42."""
    if not gold_answer:
        raise ValueError("gold answer must be non-empty")
    if not candidate_answer:
        return 0
    cand = _canonical_number(_clean_number(candidate_answer))
    gold = _canonical_number(_clean_number(gold_answer))
    if cand is not None and gold is not None:
        return int(cand == gold)
    return int(candidate_answer.strip() == gold_answer.strip())


# --- win records -------------------------------------------------------------


class WinOutcome(Enum):
    WIN = "win"
    LOSS = "loss"
    TIE = "tie"


class BaselineKind(Enum):
    GREEDY_SELF = "greedy_self"
    EXTERNAL_MODEL = "external_model"


@dataclass(frozen=True, slots=True)
class WinRecord:
    prompt_id: str
    outcome: WinOutcome
    baseline: BaselineKind


def win_rate(records: list[WinRecord]) -> float:
    """Wins count 1, ties count half."""
    if not records:
        raise EmptyRecords("win rate of zero records is undefined")
    score = sum(1.0 if r.outcome is WinOutcome.WIN else 0.5 if r.outcome is WinOutcome.TIE else 0.0 for r in records)
    return score / len(records)


def win_rate_delta(strategy_records: list[WinRecord], baseline_records: list[WinRecord]) -> float:
    """Win rate of the strategy minus the single-sample baseline, over the
    same prompts."""
    if sorted(r.prompt_id for r in strategy_records) != sorted(r.prompt_id for r in baseline_records):
        raise ValueError("strategy and baseline records must cover the same prompts")
    return win_rate(strategy_records) - win_rate(baseline_records)


# --- aggregation -------------------------------------------------------------


@dataclass
class PromptMetrics:
    """Per-prompt metric values for one strategy (or the pool itself)."""

    prompt_id: str
    language: str
    task: str
    strategy: str
    values: dict[str, float] = field(default_factory=dict)
    excluded: bool = False
    exclusion_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "language": self.language,
            "task": self.task,
            "strategy": self.strategy,
            "values": self.values,
            "excluded": self.excluded,
            "exclusion_reason": self.exclusion_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PromptMetrics:
        return cls(
            prompt_id=d["prompt_id"],
            language=d["language"],
            task=d["task"],
            strategy=d["strategy"],
            values={k: float(v) for k, v in d["values"].items()},
            excluded=d.get("excluded", False),
            exclusion_reason=d.get("exclusion_reason"),
        )


@dataclass(frozen=True, slots=True)
class ReportCell:
    language: str
    task: str
    strategy: str
    metric: str
    value: float
    n: int
    excluded: int


ENGLISH_ROLLUP = "english"
NON_ENGLISH_ROLLUP = "non_english"


@dataclass
class QualityReport:
    cells: list[ReportCell]
    rollups: list[ReportCell]
    records: list[PromptMetrics]
    exclusions: list[tuple[str, str]]  # (prompt_id, reason)
    notes: list[str] = field(default_factory=list)


def aggregate_report(records: list[PromptMetrics]) -> QualityReport:
    """Aggregate per-prompt records into per-(language, task, strategy)
    means plus English and mean-over-non-English roll-ups.

    Hope/risk means are reported as percentages.  Excluded records (for
    example zero greedy score) contribute to the excluded counts only.
    """
    records = sorted(records, key=lambda r: (r.prompt_id, r.strategy))
    groups: dict[tuple[str, str, str], list[PromptMetrics]] = {}
    for rec in records:
        groups.setdefault((rec.language, rec.task, rec.strategy), []).append(rec)

    cells: list[ReportCell] = []
    exclusions: list[tuple[str, str]] = []
    for (language, task, strategy), recs in sorted(groups.items()):
        excluded = sum(1 for r in recs if r.excluded)
        exclusions.extend((r.prompt_id, r.exclusion_reason or "excluded") for r in recs if r.excluded)
        kept = [r for r in recs if not r.excluded]
        metric_names = sorted({name for r in kept for name in r.values})
        for metric in metric_names:
            values = [r.values[metric] for r in kept if metric in r.values]
            if not values:
                continue
            mean = sum(values) / len(values)
            if metric in PERCENT_METRICS:
                mean *= 100.0
            cells.append(ReportCell(language, task, strategy, metric, mean, len(values), excluded))

    rollups: list[ReportCell] = []
    notes: list[str] = []
    by_rollup: dict[tuple[str, str, str], dict[str, ReportCell]] = {}
    for cell in cells:
        by_rollup.setdefault((cell.task, cell.strategy, cell.metric), {})[cell.language] = cell
    for (task, strategy, metric), by_language in sorted(by_rollup.items()):
        if "en" in by_language:
            en = by_language["en"]
            rollups.append(ReportCell(ENGLISH_ROLLUP, task, strategy, metric, en.value, en.n, en.excluded))
        others = [by_language[lang] for lang in sorted(by_language) if lang != "en"]
        if others:
            mean = sum(c.value for c in others) / len(others)
            rollups.append(
                ReportCell(
                    NON_ENGLISH_ROLLUP, task, strategy, metric, mean,
                    sum(c.n for c in others), sum(c.excluded for c in others),
                )
            )
    if not any(cell.language != "en" for cell in cells):
        notes.append("no non-English records; non-English roll-up absent")
    return QualityReport(cells=cells, rollups=rollups, records=records, exclusions=sorted(set(exclusions)), notes=notes)
