"""Shared fixtures and test doubles."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from parascale.backends.base import Backend, BackendDescriptor, BackendKind
from parascale.backends.mock import MockGenerationBackend, MockJudgeBackend, MockRewardBackend
from parascale.backends.synthetic import (
    SyntheticGenerationBackend,
    SyntheticJudgeBackend,
    SyntheticRewardBackend,
)
from parascale.backends.templates import TemplateSet
from parascale.types import DecodeParams, LanguageTag, PromptRecord, Provenance, Sample, SamplePool, TaskKind


def descriptor(kind: BackendKind = BackendKind.MOCK, id: str = "test", **options) -> BackendDescriptor:
    fields = {k: options.pop(k) for k in ("retry_limit", "max_concurrency", "timeout_s") if k in options}
    return BackendDescriptor(id=id, kind=kind, options=options, **fields)


def make_prompt(
    pid: str = "p0",
    language: str = "ja",
    task: TaskKind = TaskKind.OPEN_ENDED,
    text: str = "Describe the weather.",
    answer: str | None = None,
    reference: str | None = None,
) -> PromptRecord:
    return PromptRecord(
        id=pid, language=LanguageTag(language), task=task, text=text, answer=answer, reference=reference
    )


def make_sample(
    text: str,
    language: str = "ja",
    temperature: float = 0.7,
    seed: int = 0,
    provenance: Provenance = Provenance.STOCHASTIC,
    token_logprobs: tuple[float, ...] | None = None,
) -> Sample:
    return Sample(
        text=text,
        params=DecodeParams(temperature=temperature, min_p=0.2, max_tokens=64, seed=seed),
        language=LanguageTag(language),
        provenance=provenance,
        token_logprobs=token_logprobs,
    )


def make_pool(
    texts: list[str],
    language: str = "ja",
    evidence_texts: list[str] | None = None,
    evidence_language: str = "en",
    hedged: bool = False,
    logprobs: list[tuple[float, ...]] | None = None,
) -> SamplePool:
    hyps = []
    for i, text in enumerate(texts):
        greedy = hedged and i == 0
        hyps.append(
            make_sample(
                text,
                language=language,
                temperature=0.0 if greedy else 0.7,
                seed=i,
                provenance=Provenance.GREEDY if greedy else Provenance.STOCHASTIC,
                token_logprobs=logprobs[i] if logprobs else None,
            )
        )
    cross = tuple(
        make_sample(t, language=evidence_language, seed=100 + k, provenance=Provenance.CROSS_LINGUAL_EVIDENCE)
        for k, t in enumerate(evidence_texts or [])
    )
    return SamplePool(
        prompt_id="p0",
        target_language=LanguageTag(language),
        hypotheses=tuple(hyps),
        cross_lingual_evidence=cross,
    )


class TableJudgeBackend(Backend):
    """Answers pairwise comparisons from a fixed verdict table.

    The table maps (first_text, second_text) to "A" | "B" | "Tie"; the
    reverse direction is derived by complement so any traversal order sees
    a consistent judge.
    """

    def __init__(self, table: dict[tuple[str, str], str]):
        super().__init__(BackendDescriptor(id="table-judge", kind=BackendKind.MOCK))
        self.table = table

    def complete(self, request, tally=None):
        def live() -> str:
            a, b = request.candidate_texts
            if a == b:
                return "Winner: Tie"
            verdict = self.table.get((a, b))
            if verdict is None:
                verdict = {"A": "B", "B": "A", "Tie": "Tie"}[self.table[(b, a)]]
            return f"Winner: {verdict}"

        payload = {"rendered": request.rendered_prompt}
        return self._cached_call("judge_pairwise", payload, live, tally, "judge_pairwise_calls")


def write_dataset(path: Path, n: int = 10, task: str = "open_ended", languages=("en", "ja", "fr")) -> Path:
    with path.open("w") as fh:
        for i in range(n):
            record = {
                "id": f"p{i:03d}",
                "language": languages[i % len(languages)],
                "task": task,
                "prompt": f"Prompt number {i}, please respond.",
            }
            if task == "math_reasoning":
                record["answer"] = str(10 + i)
            if task == "machine_translation":
                record["reference"] = f"reference {i}"
            fh.write(json.dumps(record) + "\n")
    return path


def base_config(tmp_path: Path, dataset: Path, **overrides) -> dict:
    config = {
        "dataset": str(dataset),
        "run_id": "t",
        "output_dir": str(tmp_path / "runs"),
        "cache_dir": str(tmp_path / "cache"),
        "plan": {"n": 5, "temperature": 0.7, "min_p": 0.2, "seed": 5, "evidence_m": 3, "max_tokens": 32},
        "strategies": ["sim_mbr", "judge_mbr"],
        "backends": {
            "generator": {"kind": "mock"},
            "judge": {"kind": "mock", "rule": "longer"},
        },
    }
    config.update(overrides)
    return config


@pytest.fixture
def templates() -> TemplateSet:
    return TemplateSet()


@pytest.fixture
def mock_generator() -> MockGenerationBackend:
    return MockGenerationBackend(descriptor())


@pytest.fixture
def mock_judge_longer() -> MockJudgeBackend:
    return MockJudgeBackend(descriptor(rule="longer"))


@pytest.fixture
def mock_reward() -> MockRewardBackend:
    return MockRewardBackend(descriptor(rule="length_over_1000"))


@pytest.fixture
def synth_generator() -> SyntheticGenerationBackend:
    return SyntheticGenerationBackend(descriptor(BackendKind.SYNTHETIC))


@pytest.fixture
def synth_judge() -> SyntheticJudgeBackend:
    return SyntheticJudgeBackend(descriptor(BackendKind.SYNTHETIC))


@pytest.fixture
def synth_reward() -> SyntheticRewardBackend:
    return SyntheticRewardBackend(descriptor(BackendKind.SYNTHETIC))
