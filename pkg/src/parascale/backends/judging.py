"""Judge and reward operations over any backend implementation.

A judge backend exposes one method, complete(request) -> raw text; verdict
parsing, re-asking on unparseable output, and position handling live here
so every backend kind behaves identically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from ..errors import UnparseableVerdict
from .base import CallTally, Preference, Verdict
from .templates import (
    REASK_ONE_PASS,
    REASK_PAIRWISE,
    TemplateSet,
    parse_one_pass_choice,
    parse_preference,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JudgeRequest:
    """One judge call: the rendered prompt plus the structured fields it was
    built from, so offline backends can answer without re-parsing the text."""

    kind: str  # "pairwise" | "one_pass"
    rendered_prompt: str
    prompt_text: str
    candidate_texts: tuple[str, ...]
    template_version: str


def _flip(verdict: Verdict) -> Verdict:
    if verdict is Verdict.FIRST_WINS:
        return Verdict.SECOND_WINS
    if verdict is Verdict.SECOND_WINS:
        return Verdict.FIRST_WINS
    return Verdict.TIE


def _ask_pairwise(backend, prompt_text: str, first: str, second: str, templates: TemplateSet, tally) -> Preference:
    rendered, version = templates.render_pairwise(prompt_text, first, second)
    reasks = backend.descriptor.retry_limit
    suffix = ""
    for attempt in range(reasks + 1):
        request = JudgeRequest(
            kind="pairwise",
            rendered_prompt=rendered + suffix,
            prompt_text=prompt_text,
            candidate_texts=(first, second),
            template_version=version,
        )
        raw = backend.complete(request, tally=tally)
        verdict = parse_preference(raw)
        if verdict is not None:
            return Preference(verdict=verdict, raw_text=raw)
        logger.debug("unparseable pairwise verdict (attempt %d): %r", attempt + 1, raw[:120])
        suffix = REASK_PAIRWISE
    raise UnparseableVerdict(f"no verdict after {reasks + 1} asks; last response: {raw[:200]!r}")


def judge_pairwise(
    backend,
    prompt_text: str,
    candidate_a: str,
    candidate_b: str,
    templates: TemplateSet,
    tally: CallTally | None = None,
    both_orders: bool = False,
) -> Preference:
    """Compare two candidates; the first argument takes the A position.

    With both_orders the pair is judged twice with positions swapped and
    the verdicts merged: agreement stands, disagreement becomes a tie.
    """
    if not candidate_a or not candidate_b:
        raise ValueError("both candidates must be non-empty")
    forward = _ask_pairwise(backend, prompt_text, candidate_a, candidate_b, templates, tally)
    if not both_orders:
        return forward
    backward = _ask_pairwise(backend, prompt_text, candidate_b, candidate_a, templates, tally)
    merged = forward.verdict if forward.verdict is _flip(backward.verdict) else Verdict.TIE
    return Preference(verdict=merged, raw_text=f"{forward.raw_text} || {backward.raw_text}")


def judge_one_pass(
    backend,
    prompt_text: str,
    candidates: list[str],
    templates: TemplateSet,
    tally: CallTally | None = None,
    checklist: bool = True,
) -> tuple[int, str]:
    """Pick the best of all candidates in a single judge call.

    Returns (zero-based index, raw judge text).  The raw text keeps the
    judge's checklist and reasoning for auditability.
    """
    if len(candidates) < 2:
        raise ValueError("one-pass judging needs at least two candidates")
    rendered, version = templates.render_one_pass(prompt_text, candidates, checklist=checklist)
    reasks = backend.descriptor.retry_limit
    suffix = ""
    for attempt in range(reasks + 1):
        request = JudgeRequest(
            kind="one_pass",
            rendered_prompt=rendered + suffix,
            prompt_text=prompt_text,
            candidate_texts=tuple(candidates),
            template_version=version,
        )
        raw = backend.complete(request, tally=tally)
        choice = parse_one_pass_choice(raw, len(candidates))
        if choice is not None:
            return choice, raw
        logger.debug("unparseable one-pass verdict (attempt %d): %r", attempt + 1, raw[:120])
        suffix = REASK_ONE_PASS
    raise UnparseableVerdict(f"no choice after {reasks + 1} asks; last response: {raw[:200]!r}")


def reward_score(backend, prompt_text: str, candidate_text: str, tally: CallTally | None = None) -> float:
    """Score one candidate with the reward backend; higher is better."""
    return backend.score(prompt_text, candidate_text, tally=tally)
