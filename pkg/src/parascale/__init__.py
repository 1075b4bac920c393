"""Parallel test-time scaling for multilingual generation.

Build candidate pools from generation backends under configurable sampling
strategies, select a final output with likelihood, similarity-MBR, reward
best-of-N, judge MBR, cross-lingual MBR, or checklisted one-pass judging,
and evaluate pool and selection quality across languages and tasks.
"""

from .metrics import (
    PoolDiagnostics,
    aggregate_report,
    exact_match,
    extract_final_answer,
    pool_diagnostics,
    win_rate,
    win_rate_delta,
)
from .sampling import (
    EvidenceLanguageRule,
    PlanStrategy,
    SamplingPlan,
    assemble_pool,
    build_plan,
    extend_evidence,
    materialize_slots,
)
from .selection import (
    PairMode,
    brute_force_mbr_oracle,
    select_chops,
    select_judge_mbr,
    select_likelihood,
    select_reward_bon,
    select_sim_mbr,
    select_xmbr,
    shingle_similarity,
)
from .types import (
    CallLedger,
    DecodeParams,
    LanguageTag,
    PromptRecord,
    Provenance,
    Sample,
    SamplePool,
    SelectionOutcome,
    Strategy,
    TaskKind,
    validate_prompt_record,
)

__version__ = "0.1.0"

__all__ = [
    "PoolDiagnostics",
    "aggregate_report",
    "exact_match",
    "extract_final_answer",
    "pool_diagnostics",
    "win_rate",
    "win_rate_delta",
    "EvidenceLanguageRule",
    "PlanStrategy",
    "SamplingPlan",
    "assemble_pool",
    "build_plan",
    "extend_evidence",
    "materialize_slots",
    "PairMode",
    "brute_force_mbr_oracle",
    "select_chops",
    "select_judge_mbr",
    "select_likelihood",
    "select_reward_bon",
    "select_sim_mbr",
    "select_xmbr",
    "shingle_similarity",
    "CallLedger",
    "DecodeParams",
    "LanguageTag",
    "PromptRecord",
    "Provenance",
    "Sample",
    "SamplePool",
    "SelectionOutcome",
    "Strategy",
    "TaskKind",
    "validate_prompt_record",
]
