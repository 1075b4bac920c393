"""Core domain types: samples, pools, decode parameters, selection outcomes.

Everything here is immutable after construction and safe to share across
threads.  File I/O and wire formats live in the harness; these types only
know how to convert themselves to and from plain dicts.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum
from typing import Any

from .errors import EmptyPrompt, MissingAnswer, MissingReference


class TaskKind(Enum):
    OPEN_ENDED = "open_ended"
    MATH_REASONING = "math_reasoning"
    MACHINE_TRANSLATION = "machine_translation"


class Provenance(Enum):
    GREEDY = "greedy"
    STOCHASTIC = "stochastic"
    CROSS_LINGUAL_EVIDENCE = "cross_lingual_evidence"


class Strategy(Enum):
    LIKELIHOOD = "likelihood"
    SIM_MBR = "sim_mbr"
    REWARD_BON = "reward_bon"
    JUDGE_MBR = "judge_mbr"
    XMBR = "xmbr"
    CHOPS = "chops"


@dataclass(frozen=True, slots=True)
class LanguageTag:
    """Lowercase ISO-639-1-style language code, e.g. "en", "ja", "zh"."""

    code: str

    def __post_init__(self) -> None:
        if not self.code or not all("a" <= c <= "z" for c in self.code):
            raise ValueError(f"language code must be non-empty ASCII lowercase, got {self.code!r}")

    @property
    def is_english(self) -> bool:
        return self.code == "en"


@dataclass(frozen=True, slots=True)
class DecodeParams:
    """Decoding knobs for one generation call.

    temperature 0 means greedy decoding; min_p prunes tokens whose
    probability falls below min_p times the most likely token's probability.
    """

    temperature: float
    min_p: float = 0.0
    max_tokens: int = 256
    seed: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be in [0, 2], got {self.temperature}")
        if not 0.0 <= self.min_p <= 1.0:
            raise ValueError(f"min_p must be in [0, 1], got {self.min_p}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be positive, got {self.max_tokens}")

    @property
    def greedy(self) -> bool:
        return self.temperature == 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "temperature": self.temperature,
            "min_p": self.min_p,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DecodeParams:
        return cls(
            temperature=d["temperature"],
            min_p=d.get("min_p", 0.0),
            max_tokens=d.get("max_tokens", 256),
            seed=d.get("seed"),
        )


@dataclass(frozen=True, slots=True)
class PromptRecord:
    """One evaluation prompt with optional gold data.

    Math-reasoning records carry the gold final answer; machine-translation
    records carry the reference translation; open-ended records carry
    neither.
    """

    id: str
    language: LanguageTag
    task: TaskKind
    text: str
    reference: str | None = None
    answer: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "language": self.language.code,
            "task": self.task.value,
            "prompt": self.text,
        }
        if self.reference is not None:
            d["reference"] = self.reference
        if self.answer is not None:
            d["answer"] = self.answer
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PromptRecord:
        return cls(
            id=d["id"],
            language=LanguageTag(d["language"]),
            task=TaskKind(d["task"]),
            text=d["prompt"],
            reference=d.get("reference"),
            answer=d.get("answer"),
        )


def validate_prompt_record(record: PromptRecord) -> None:
    """Raise if the record violates its task's gold-data invariants."""
    if not record.text:
        raise EmptyPrompt(f"record {record.id!r} has an empty prompt")
    if record.task is TaskKind.MATH_REASONING and not record.answer:
        raise MissingAnswer(f"math record {record.id!r} has no gold answer")
    if record.task is TaskKind.MACHINE_TRANSLATION and not record.reference:
        raise MissingReference(f"translation record {record.id!r} has no reference")


@dataclass(frozen=True, slots=True)
class Sample:
    """One generated completion with provenance and decode metadata.

    token_logprobs are natural-log probabilities of the generated tokens
    only (prompt tokens excluded); None when the backend does not report
    them.
    """

    text: str
    params: DecodeParams
    language: LanguageTag
    provenance: Provenance
    token_logprobs: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.provenance is Provenance.GREEDY and not self.params.greedy:
            raise ValueError("greedy-provenance sample must have temperature 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "params": self.params.to_dict(),
            "language": self.language.code,
            "provenance": self.provenance.value,
            "token_logprobs": list(self.token_logprobs) if self.token_logprobs is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Sample:
        lp = d.get("token_logprobs")
        return cls(
            text=d["text"],
            params=DecodeParams.from_dict(d["params"]),
            language=LanguageTag(d["language"]),
            provenance=Provenance(d["provenance"]),
            token_logprobs=tuple(lp) if lp is not None else None,
        )


@dataclass(frozen=True)
class SamplePool:
    """Candidate set for one prompt.

    hypotheses is the selectable set; in_language_evidence defaults to the
    same objects (the standard MBR approximation); cross_lingual_evidence
    holds extra samples generated in a different language and is never
    selectable.
    """

    prompt_id: str
    target_language: LanguageTag
    hypotheses: tuple[Sample, ...]
    in_language_evidence: tuple[Sample, ...] | None = None
    cross_lingual_evidence: tuple[Sample, ...] = ()

    def __post_init__(self) -> None:
        if self.in_language_evidence is None:
            object.__setattr__(self, "in_language_evidence", self.hypotheses)
        if not self.hypotheses:
            raise ValueError("pool must contain at least one hypothesis")
        for h in self.hypotheses:
            if h.language != self.target_language:
                raise ValueError("all hypotheses must share the pool's target language")
        n_greedy = sum(1 for h in self.hypotheses if h.provenance is Provenance.GREEDY)
        if n_greedy > 1:
            raise ValueError(f"pool has {n_greedy} greedy hypotheses; at most one allowed")
        for s in self.cross_lingual_evidence:
            if s.provenance is Provenance.CROSS_LINGUAL_EVIDENCE and s.language == self.target_language:
                raise ValueError("cross-lingual evidence must differ from the target language")

    @property
    def greedy_hypothesis(self) -> Sample | None:
        for h in self.hypotheses:
            if h.provenance is Provenance.GREEDY:
                return h
        return None

    def to_dict(self) -> dict[str, Any]:
        aliased = self.in_language_evidence is self.hypotheses
        return {
            "prompt_id": self.prompt_id,
            "target_language": self.target_language.code,
            "hypotheses": [s.to_dict() for s in self.hypotheses],
            "in_language_evidence": None if aliased else [s.to_dict() for s in self.in_language_evidence],
            "cross_lingual_evidence": [s.to_dict() for s in self.cross_lingual_evidence],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SamplePool:
        ev = d.get("in_language_evidence")
        return cls(
            prompt_id=d["prompt_id"],
            target_language=LanguageTag(d["target_language"]),
            hypotheses=tuple(Sample.from_dict(s) for s in d["hypotheses"]),
            in_language_evidence=tuple(Sample.from_dict(s) for s in ev) if ev is not None else None,
            cross_lingual_evidence=tuple(Sample.from_dict(s) for s in d.get("cross_lingual_evidence", ())),
        )


@dataclass(frozen=True, slots=True)
class CallLedger:
    """Exact counts of backend invocations; cache hits tracked separately."""

    generation_calls: int = 0
    judge_pairwise_calls: int = 0
    judge_onepass_calls: int = 0
    reward_calls: int = 0
    cached_hits: int = 0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be >= 0")

    def __add__(self, other: CallLedger) -> CallLedger:
        return CallLedger(
            generation_calls=self.generation_calls + other.generation_calls,
            judge_pairwise_calls=self.judge_pairwise_calls + other.judge_pairwise_calls,
            judge_onepass_calls=self.judge_onepass_calls + other.judge_onepass_calls,
            reward_calls=self.reward_calls + other.reward_calls,
            cached_hits=self.cached_hits + other.cached_hits,
        )

    def to_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict[str, int]) -> CallLedger:
        return cls(**d)


def first_argmax(values: list[float] | tuple[float, ...]) -> int:
    """Index of the maximum value; the first occurrence wins on ties."""
    if not values:
        raise ValueError("first_argmax of empty sequence")
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def first_argmin(values: list[float] | tuple[float, ...]) -> int:
    """Index of the minimum value; the first occurrence wins on ties."""
    if not values:
        raise ValueError("first_argmin of empty sequence")
    best = 0
    for i in range(1, len(values)):
        if values[i] < values[best]:
            best = i
    return best


@dataclass(frozen=True, slots=True)
class SelectionOutcome:
    """Result of running one selection strategy over a pool.

    per_candidate_score stores utility (or negated risk) per hypothesis;
    chosen_index is always the first argmax of that list.
    """

    strategy: Strategy
    chosen_index: int
    per_candidate_score: tuple[float, ...]
    ledger: CallLedger
    rationale: str | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.chosen_index < len(self.per_candidate_score):
            raise ValueError("chosen_index out of range")
        if self.chosen_index != first_argmax(self.per_candidate_score):
            raise ValueError("chosen_index must be the first argmax of per_candidate_score")

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy.value,
            "chosen_index": self.chosen_index,
            "per_candidate_score": list(self.per_candidate_score),
            "ledger": self.ledger.to_dict(),
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SelectionOutcome:
        return cls(
            strategy=Strategy(d["strategy"]),
            chosen_index=d["chosen_index"],
            per_candidate_score=tuple(d["per_candidate_score"]),
            ledger=CallLedger.from_dict(d["ledger"]),
            rationale=d.get("rationale"),
        )
