"""Sampling plans and pool assembly.

A plan describes how the candidate pool for each prompt is drawn: one
temperature for every slot or a per-slot draw from a menu, optionally
"hedged" by dedicating slot 0 to greedy decoding.  Slot seeds are
seed + slot_index, so growing the pool extends it without reshuffling
the samples already drawn — pool-size scans rely on this.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .backends.keys import stable_seed
from .errors import InvalidConfig, PartialPool
from .types import DecodeParams, LanguageTag, PromptRecord, Provenance, Sample, SamplePool

logger = logging.getLogger(__name__)

TEMPERATURE_MENU_DEFAULT = (0.0, 0.3, 0.7, 0.8, 0.9, 1.0)


class PlanStrategy(Enum):
    SINGLE_TEMP = "single_temp"
    MULTI_TEMP = "multi_temp"
    HEDGED_SINGLE_TEMP = "hedged_single_temp"
    HEDGED_MULTI_TEMP = "hedged_multi_temp"


_HEDGED = {PlanStrategy.HEDGED_SINGLE_TEMP, PlanStrategy.HEDGED_MULTI_TEMP}
_MULTI = {PlanStrategy.MULTI_TEMP, PlanStrategy.HEDGED_MULTI_TEMP}


class EvidenceLanguageRule(Enum):
    DEFAULT = "default"  # Chinese for English prompts, English for everything else
    FIXED = "fixed"
    RANDOM_FROM_SET = "random_from_set"
    SAME = "same"  # extra in-language evidence


@dataclass(frozen=True)
class SamplingPlan:
    strategy: PlanStrategy
    n: int
    temperature: float = 0.7
    temperature_menu: tuple[float, ...] = TEMPERATURE_MENU_DEFAULT
    min_p: float = 0.2
    max_tokens: int = 256
    seed: int = 0
    evidence_m: int = 3
    evidence_language_rule: EvidenceLanguageRule = EvidenceLanguageRule.DEFAULT
    evidence_language: str | None = None  # for FIXED
    evidence_language_set: tuple[str, ...] = ()  # for RANDOM_FROM_SET

    @property
    def hedged(self) -> bool:
        return self.strategy in _HEDGED


def build_plan(
    strategy: str | PlanStrategy = PlanStrategy.HEDGED_SINGLE_TEMP,
    n: int = 5,
    temperature: float = 0.7,
    temperature_menu: tuple[float, ...] | list[float] = TEMPERATURE_MENU_DEFAULT,
    min_p: float = 0.2,
    max_tokens: int = 256,
    seed: int = 0,
    evidence_m: int = 3,
    evidence_language_rule: str | EvidenceLanguageRule = EvidenceLanguageRule.DEFAULT,
    evidence_language: str | None = None,
    evidence_language_set: tuple[str, ...] | list[str] = (),
) -> SamplingPlan:
    """Validate and build a sampling plan; defaults match the recommended
    test configuration of hedged sampling at 0.7 with min-p 0.2 and N=5."""
    strategy = PlanStrategy(strategy) if isinstance(strategy, str) else strategy
    rule = (
        EvidenceLanguageRule(evidence_language_rule)
        if isinstance(evidence_language_rule, str)
        else evidence_language_rule
    )
    if n < 1:
        raise InvalidConfig("pool size must be at least 1")
    if strategy in _HEDGED and n < 2:
        raise InvalidConfig("hedged plans need n >= 2 to leave room for a stochastic slot")
    if strategy in _MULTI and not temperature_menu:
        raise InvalidConfig("multi-temperature plans need a non-empty temperature menu")
    if evidence_m < 0:
        raise InvalidConfig("evidence_m must be >= 0")
    if rule is EvidenceLanguageRule.FIXED and not evidence_language:
        raise InvalidConfig("fixed evidence rule needs evidence_language")
    if rule is EvidenceLanguageRule.RANDOM_FROM_SET and not evidence_language_set:
        raise InvalidConfig("random_from_set evidence rule needs evidence_language_set")
    # DecodeParams guards (temperature bounds, min_p range, max_tokens) apply
    # to every temperature the plan can emit.
    for temp in [temperature, *temperature_menu] if strategy in _MULTI else [temperature]:
        DecodeParams(temperature=temp, min_p=min_p, max_tokens=max_tokens)
    return SamplingPlan(
        strategy=strategy,
        n=n,
        temperature=temperature,
        temperature_menu=tuple(temperature_menu),
        min_p=min_p,
        max_tokens=max_tokens,
        seed=seed,
        evidence_m=evidence_m,
        evidence_language_rule=rule,
        evidence_language=evidence_language,
        evidence_language_set=tuple(evidence_language_set),
    )


def with_pool_size(plan: SamplingPlan, n: int) -> SamplingPlan:
    """Copy of the plan at a different pool size.

    Unlike build_plan this allows hedged n=1 (a pool holding only the greedy
    sample), which pool-size scans use as their single-sample point.
    """
    if n < 1:
        raise InvalidConfig("pool size must be at least 1")
    return dataclasses.replace(plan, n=n)


def _slot_temperature(plan: SamplingPlan, slot_index: int) -> float:
    if plan.strategy in _MULTI:
        rng = np.random.default_rng(stable_seed("slot-temp", plan.seed, slot_index))
        return float(plan.temperature_menu[int(rng.integers(0, len(plan.temperature_menu)))])
    return plan.temperature


def materialize_slots(plan: SamplingPlan) -> list[DecodeParams]:
    """Decode parameters per pool slot, in slot order.

    Hedged plans put the greedy slot at index 0; every stochastic slot
    carries the plan's min_p and the derived seed seed + slot_index.
    """
    slots: list[DecodeParams] = []
    for i in range(plan.n):
        if plan.hedged and i == 0:
            slots.append(DecodeParams(temperature=0.0, min_p=0.0, max_tokens=plan.max_tokens, seed=plan.seed + i))
        else:
            slots.append(
                DecodeParams(
                    temperature=_slot_temperature(plan, i),
                    min_p=plan.min_p,
                    max_tokens=plan.max_tokens,
                    seed=plan.seed + i,
                )
            )
    return slots


def assemble_pool(backend, prompt: PromptRecord, plan: SamplingPlan, tally=None) -> SamplePool:
    """Generate one sample per slot and build the pool.

    The in-language evidence set aliases the hypotheses (the standard MBR
    approximation); cross-lingual evidence is added by extend_evidence.
    Slot failures are collected and reported together as PartialPool.
    """
    slots = materialize_slots(plan)
    hypotheses: list[Sample] = []
    failed: list[int] = []
    for i, params in enumerate(slots):
        try:
            sample = backend.generate(prompt, params, n=1, tally=tally)[0]
        except Exception as exc:  # noqa: BLE001 - per-slot fault isolation
            logger.warning("slot %d failed for prompt %s: %s", i, prompt.id, exc)
            failed.append(i)
            continue
        keep_greedy = plan.hedged and i == 0
        if sample.provenance is Provenance.GREEDY and not keep_greedy:
            sample = dataclasses.replace(sample, provenance=Provenance.STOCHASTIC)
        hypotheses.append(sample)
    if failed:
        raise PartialPool(f"{len(failed)} of {plan.n} slots failed for prompt {prompt.id}", failed)
    return SamplePool(
        prompt_id=prompt.id,
        target_language=prompt.language,
        hypotheses=tuple(hypotheses),
    )


def evidence_language(plan: SamplingPlan, prompt: PromptRecord) -> LanguageTag:
    """Language the cross-lingual evidence is generated in."""
    rule = plan.evidence_language_rule
    if rule is EvidenceLanguageRule.SAME:
        return prompt.language
    if rule is EvidenceLanguageRule.FIXED:
        return LanguageTag(plan.evidence_language)
    if rule is EvidenceLanguageRule.RANDOM_FROM_SET:
        candidates = [c for c in plan.evidence_language_set if c != prompt.language.code]
        if not candidates:
            raise InvalidConfig("evidence_language_set leaves no language other than the target")
        rng = np.random.default_rng(stable_seed("ev-lang", plan.seed, prompt.id))
        return LanguageTag(candidates[int(rng.integers(0, len(candidates)))])
    # Default: sample evidence in Chinese for English prompts, in English
    # for everything else (a dominant-language pivot).
    return LanguageTag("zh") if prompt.language.is_english else LanguageTag("en")


def extend_evidence(backend, prompt: PromptRecord, pool: SamplePool, plan: SamplingPlan, tally=None) -> SamplePool:
    """Append the plan's M evidence samples to the pool.

    Evidence is drawn at the plan's stochastic temperature with min_p, using
    seeds that continue past the hypothesis slots so resizing either set
    never reshuffles the other.  Under the SAME rule the new samples join
    the in-language evidence set; under every other rule they become
    cross-lingual evidence in the rule's language.
    """
    if plan.evidence_m < 1:
        raise InvalidConfig("extend_evidence needs evidence_m >= 1")
    lang = evidence_language(plan, prompt)
    same_language = lang == prompt.language
    extra: list[Sample] = []
    for j in range(plan.evidence_m):
        params = DecodeParams(
            temperature=plan.temperature if plan.strategy not in _MULTI else _slot_temperature(plan, plan.n + j),
            min_p=plan.min_p,
            max_tokens=plan.max_tokens,
            seed=plan.seed + plan.n + j,
        )
        sample = backend.generate(prompt, params, n=1, respond_in=None if same_language else lang, tally=tally)[0]
        provenance = Provenance.STOCHASTIC if same_language else Provenance.CROSS_LINGUAL_EVIDENCE
        extra.append(dataclasses.replace(sample, provenance=provenance))
    if same_language:
        return SamplePool(
            prompt_id=pool.prompt_id,
            target_language=pool.target_language,
            hypotheses=pool.hypotheses,
            in_language_evidence=tuple(pool.in_language_evidence) + tuple(extra),
            cross_lingual_evidence=pool.cross_lingual_evidence,
        )
    return SamplePool(
        prompt_id=pool.prompt_id,
        target_language=pool.target_language,
        hypotheses=pool.hypotheses,
        in_language_evidence=pool.in_language_evidence,
        cross_lingual_evidence=tuple(pool.cross_lingual_evidence) + tuple(extra),
    )
