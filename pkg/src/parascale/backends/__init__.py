"""Backend implementations: live HTTP, deterministic mock, synthetic simulator."""

from .base import Backend, BackendDescriptor, BackendKind, CallTally, Preference, Verdict
from .cache import ResponseCache
from .http import HttpGenerationBackend, HttpJudgeBackend, HttpRewardBackend
from .judging import JudgeRequest, judge_one_pass, judge_pairwise, reward_score
from .keys import content_key, stable_seed
from .mock import (
    MockGenerationBackend,
    MockJudgeBackend,
    MockRewardBackend,
    ScriptedJudgeBackend,
    sample_token,
)
from .synthetic import (
    DEFAULT_ENGLISH_PROFILE,
    DEFAULT_NON_ENGLISH_PROFILE,
    SyntheticGenerationBackend,
    SyntheticJudgeBackend,
    SyntheticProfile,
    SyntheticRewardBackend,
    hidden_quality,
)
from .templates import TemplateSet, apply_cross_lingual, parse_one_pass_choice, parse_preference

__all__ = [
    "Backend",
    "BackendDescriptor",
    "BackendKind",
    "CallTally",
    "Preference",
    "Verdict",
    "ResponseCache",
    "HttpGenerationBackend",
    "HttpJudgeBackend",
    "HttpRewardBackend",
    "JudgeRequest",
    "judge_one_pass",
    "judge_pairwise",
    "reward_score",
    "content_key",
    "stable_seed",
    "MockGenerationBackend",
    "MockJudgeBackend",
    "MockRewardBackend",
    "ScriptedJudgeBackend",
    "sample_token",
    "DEFAULT_ENGLISH_PROFILE",
    "DEFAULT_NON_ENGLISH_PROFILE",
    "SyntheticGenerationBackend",
    "SyntheticJudgeBackend",
    "SyntheticProfile",
    "SyntheticRewardBackend",
    "hidden_quality",
    "TemplateSet",
    "apply_cross_lingual",
    "parse_one_pass_choice",
    "parse_preference",
]
