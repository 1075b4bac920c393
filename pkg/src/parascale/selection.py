"""Selection strategies over a sample pool.

Pairwise risk strategies accumulate judge losses into a RiskTable and pick
the hypothesis with minimum accumulated risk.  In the default single-order
mode each unordered in-language pair is judged once and the losing side's
loss is recorded as the complement; the ordered mode issues one directed
call per term of the risk sum instead, matching the ledger arithmetic of
N*(N-1) for pairwise MBR and N*(N+M) for its cross-lingual extension.
"""

from __future__ import annotations

import math
from enum import Enum

from .backends.base import CallTally, Verdict
from .backends.judging import judge_one_pass, judge_pairwise, reward_score
from .backends.templates import TemplateSet
from .errors import ContextOverflow, EmptyMatrix, MissingLogprobs
from .types import (
    CallLedger,
    PromptRecord,
    SamplePool,
    SelectionOutcome,
    Strategy,
    first_argmax,
    first_argmin,
)


class PairMode(Enum):
    SINGLE = "single"  # one call per unordered pair, complement recorded
    ORDERED = "ordered"  # one call per directed term of the risk sum


# Loss from the A-position candidate's perspective.
_LOSS_FROM_VERDICT = {Verdict.FIRST_WINS: 0.0, Verdict.SECOND_WINS: 1.0, Verdict.TIE: 0.5}


class RiskTable:
    """Accumulated pairwise losses per hypothesis.

    Every recorded loss is kept in pair_cache keyed by
    (hypothesis_index, evidence_key), so the accumulated risks can always
    be recomputed and audited.
    """

    def __init__(self, n_hypotheses: int):
        self.n_hypotheses = n_hypotheses
        self.pair_cache: dict[tuple[int, tuple[str, int]], float] = {}
        self._risk = [0.0] * n_hypotheses

    def record(self, hyp_index: int, evidence_key: tuple[str, int], loss: float) -> None:
        if (hyp_index, evidence_key) in self.pair_cache:
            raise ValueError(f"duplicate loss for {(hyp_index, evidence_key)}")
        self.pair_cache[(hyp_index, evidence_key)] = loss
        self._risk[hyp_index] += loss

    def risks(self) -> list[float]:
        return list(self._risk)

    def risks_from_cache(self) -> list[float]:
        """Recompute risks from pair_cache; must equal risks() exactly."""
        out = [0.0] * self.n_hypotheses
        for (i, _), loss in self.pair_cache.items():
            out[i] += loss
        return out


def shingle_similarity(a: str, b: str) -> float:
    """Jaccard similarity of the two texts' consecutive token-bigram sets.

    Tokens split on whitespace.  Both shingle sets empty (texts shorter
    than two tokens) counts as identical; exactly one empty as disjoint.
    """
    ta, tb = a.split(), b.split()
    sa = {(ta[i], ta[i + 1]) for i in range(len(ta) - 1)}
    sb = {(tb[i], tb[i + 1]) for i in range(len(tb) - 1)}
    if not sa and not sb:
        return 1.0
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


def brute_force_mbr_oracle(loss_matrix: list[list[float]]) -> int:
    """Row index with the minimum row sum; first occurrence wins ties.

    Reference implementation of the risk argmin used to validate the
    incremental RiskTable in tests.
    """
    if not loss_matrix or not loss_matrix[0]:
        raise EmptyMatrix("loss matrix must have at least one row and column")
    width = len(loss_matrix[0])
    if any(len(row) != width for row in loss_matrix):
        raise ValueError("loss matrix must be rectangular")
    sums = [math.fsum(row) for row in loss_matrix]
    return first_argmin(sums)


def _evidence_prefix_overlap(pool: SamplePool) -> bool:
    """True when the in-language evidence starts with the hypotheses
    themselves (the default aliasing and every builder in this package)."""
    ev = pool.in_language_evidence
    n = len(pool.hypotheses)
    return len(ev) >= n and all(ev[j] == pool.hypotheses[j] for j in range(n))


def select_likelihood(pool: SamplePool, length_normalized: bool = False) -> SelectionOutcome:
    """Pick the hypothesis with the highest summed token log-probability."""
    missing = [i for i, h in enumerate(pool.hypotheses) if h.token_logprobs is None]
    if missing:
        raise MissingLogprobs(f"hypotheses {missing} carry no token logprobs")
    scores = []
    for h in pool.hypotheses:
        total = math.fsum(h.token_logprobs)
        if length_normalized and h.token_logprobs:
            total /= len(h.token_logprobs)
        scores.append(total)
    return SelectionOutcome(
        strategy=Strategy.LIKELIHOOD,
        chosen_index=first_argmax(scores),
        per_candidate_score=tuple(scores),
        ledger=CallLedger(),
    )


def select_sim_mbr(pool: SamplePool) -> SelectionOutcome:
    """Minimum-risk selection under the bigram-overlap loss; no backend calls."""
    overlap = _evidence_prefix_overlap(pool)
    table = RiskTable(len(pool.hypotheses))
    for i, hyp in enumerate(pool.hypotheses):
        for j, ev in enumerate(pool.in_language_evidence):
            if overlap and j == i:
                continue
            table.record(i, ("ev", j), 1.0 - shingle_similarity(ev.text, hyp.text))
    risks = table.risks()
    return SelectionOutcome(
        strategy=Strategy.SIM_MBR,
        chosen_index=first_argmin(risks),
        per_candidate_score=tuple(-r for r in risks),
        ledger=CallLedger(),
    )


def select_reward_bon(reward_backend, prompt: PromptRecord, pool: SamplePool) -> SelectionOutcome:
    """Best-of-N under an extrinsic reward score."""
    tally = CallTally()
    scores = [reward_score(reward_backend, prompt.text, h.text, tally=tally) for h in pool.hypotheses]
    return SelectionOutcome(
        strategy=Strategy.REWARD_BON,
        chosen_index=first_argmax(scores),
        per_candidate_score=tuple(scores),
        ledger=tally.freeze(),
    )


def _judge_in_language(
    judge_backend,
    prompt: PromptRecord,
    pool: SamplePool,
    templates: TemplateSet,
    table: RiskTable,
    tally: CallTally,
    mode: PairMode,
    include_self_in_ordered: bool,
) -> None:
    hyps = pool.hypotheses
    evidence = pool.in_language_evidence
    overlap = _evidence_prefix_overlap(pool)
    n = len(hyps)

    if mode is PairMode.SINGLE and overlap:
        for i in range(n):
            for j in range(i + 1, n):
                pref = judge_pairwise(judge_backend, prompt.text, hyps[i].text, hyps[j].text, templates, tally=tally)
                loss_i = _LOSS_FROM_VERDICT[pref.verdict]
                table.record(i, ("hyp", j), loss_i)
                table.record(j, ("hyp", i), 1.0 - loss_i)
        extra_start = n
    elif mode is PairMode.ORDERED and overlap:
        for i in range(n):
            for j in range(n):
                if j == i and not include_self_in_ordered:
                    continue
                pref = judge_pairwise(judge_backend, prompt.text, hyps[i].text, evidence[j].text, templates, tally=tally)
                table.record(i, ("hyp", j), _LOSS_FROM_VERDICT[pref.verdict])
        extra_start = n
    else:
        # Evidence does not embed the hypotheses: judge every directed
        # (hypothesis, evidence) pair once.
        extra_start = 0

    for i in range(n):
        for j in range(extra_start, len(evidence)):
            pref = judge_pairwise(judge_backend, prompt.text, hyps[i].text, evidence[j].text, templates, tally=tally)
            table.record(i, ("ev", j), _LOSS_FROM_VERDICT[pref.verdict])


def _judge_cross_lingual(
    judge_backend,
    prompt: PromptRecord,
    pool: SamplePool,
    templates: TemplateSet,
    table: RiskTable,
    tally: CallTally,
) -> None:
    # One direction only: the hypothesis takes the candidate position, the
    # cross-lingual sample acts as a pseudo-reference and is never selectable.
    for i, hyp in enumerate(pool.hypotheses):
        for k, ev in enumerate(pool.cross_lingual_evidence):
            pref = judge_pairwise(judge_backend, prompt.text, hyp.text, ev.text, templates, tally=tally)
            table.record(i, ("xev", k), _LOSS_FROM_VERDICT[pref.verdict])


def select_judge_mbr(
    judge_backend,
    prompt: PromptRecord,
    pool: SamplePool,
    templates: TemplateSet,
    mode: PairMode = PairMode.SINGLE,
) -> SelectionOutcome:
    """Minimum-risk selection under pairwise judge verdicts over the
    in-language evidence set."""
    tally = CallTally()
    table = RiskTable(len(pool.hypotheses))
    _judge_in_language(judge_backend, prompt, pool, templates, table, tally, mode, include_self_in_ordered=False)
    risks = table.risks()
    return SelectionOutcome(
        strategy=Strategy.JUDGE_MBR,
        chosen_index=first_argmin(risks),
        per_candidate_score=tuple(-r for r in risks),
        ledger=tally.freeze(),
    )


def select_xmbr(
    judge_backend,
    prompt: PromptRecord,
    pool: SamplePool,
    templates: TemplateSet,
    mode: PairMode = PairMode.SINGLE,
) -> SelectionOutcome:
    """Judge MBR with the evidence set extended by cross-lingual samples.

    With no cross-lingual evidence this reduces exactly to select_judge_mbr.
    Ordered mode issues one call per directed term including self-pairs,
    preserving the N*(N+M) comparison count.
    """
    tally = CallTally()
    table = RiskTable(len(pool.hypotheses))
    _judge_in_language(
        judge_backend, prompt, pool, templates, table, tally, mode,
        include_self_in_ordered=mode is PairMode.ORDERED,
    )
    _judge_cross_lingual(judge_backend, prompt, pool, templates, table, tally)
    risks = table.risks()
    return SelectionOutcome(
        strategy=Strategy.XMBR,
        chosen_index=first_argmin(risks),
        per_candidate_score=tuple(-r for r in risks),
        ledger=tally.freeze(),
    )


def select_chops(
    judge_backend,
    prompt: PromptRecord,
    pool: SamplePool,
    templates: TemplateSet,
    checklist: bool = True,
    separate_checklist: bool = False,
    context_budget_tokens: int = 8192,
) -> SelectionOutcome:
    """Checklisted one-pass selection: a single judge call sees the prompt
    and every numbered candidate, writes a task-specific checklist, and
    names the best candidate.

    separate_checklist splits checklist generation into its own call (an
    ablation); it costs two one-pass calls instead of one.  A singleton
    pool short-circuits to its only candidate without any call.
    """
    tally = CallTally()
    hyps = pool.hypotheses
    if len(hyps) == 1:
        return SelectionOutcome(
            strategy=Strategy.CHOPS, chosen_index=0, per_candidate_score=(1.0,), ledger=tally.freeze()
        )
    candidates = [h.text for h in hyps]
    rendered, _ = templates.render_one_pass(prompt.text, candidates, checklist=checklist)
    estimated_tokens = len(rendered) / 4  # rough chars-per-token estimate
    if estimated_tokens > context_budget_tokens:
        raise ContextOverflow(
            f"one-pass prompt needs ~{estimated_tokens:.0f} tokens; budget is {context_budget_tokens}"
        )
    rationale_parts = []
    if separate_checklist:
        _, checklist_text = judge_one_pass(
            judge_backend, f"Write a short checklist of criteria for judging answers to:\n{prompt.text}",
            candidates, templates, tally=tally, checklist=True,
        )
        rationale_parts.append(checklist_text)
        chosen, raw = judge_one_pass(
            judge_backend, f"{prompt.text}\n\nChecklist:\n{checklist_text}",
            candidates, templates, tally=tally, checklist=False,
        )
    else:
        chosen, raw = judge_one_pass(judge_backend, prompt.text, candidates, templates, tally=tally, checklist=checklist)
    rationale_parts.append(raw)
    scores = tuple(1.0 if i == chosen else 0.0 for i in range(len(hyps)))
    return SelectionOutcome(
        strategy=Strategy.CHOPS,
        chosen_index=chosen,
        per_candidate_score=scores,
        ledger=tally.freeze(),
        rationale="\n---\n".join(rationale_parts),
    )


def run_strategy(
    strategy: Strategy,
    prompt: PromptRecord,
    pool: SamplePool,
    *,
    judge_backend=None,
    reward_backend=None,
    templates: TemplateSet | None = None,
    mode: PairMode = PairMode.SINGLE,
    length_normalized: bool = False,
    chops_checklist: bool = True,
    context_budget_tokens: int = 8192,
) -> SelectionOutcome:
    """Dispatch one strategy over a pool."""
    if strategy is Strategy.LIKELIHOOD:
        return select_likelihood(pool, length_normalized=length_normalized)
    if strategy is Strategy.SIM_MBR:
        return select_sim_mbr(pool)
    if strategy is Strategy.REWARD_BON:
        if reward_backend is None:
            raise ValueError("reward_bon needs a reward backend")
        return select_reward_bon(reward_backend, prompt, pool)
    if templates is None or judge_backend is None:
        raise ValueError(f"{strategy.value} needs a judge backend and templates")
    if strategy is Strategy.JUDGE_MBR:
        return select_judge_mbr(judge_backend, prompt, pool, templates, mode=mode)
    if strategy is Strategy.XMBR:
        return select_xmbr(judge_backend, prompt, pool, templates, mode=mode)
    if strategy is Strategy.CHOPS:
        return select_chops(
            judge_backend, prompt, pool, templates,
            checklist=chops_checklist, context_budget_tokens=context_budget_tokens,
        )
    raise ValueError(f"unknown strategy {strategy}")
