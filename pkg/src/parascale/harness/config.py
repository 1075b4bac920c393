"""Run configuration: a single YAML file with nested sections.

Secrets are referenced by environment variable name and never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..backends.base import BackendDescriptor, BackendKind
from ..backends.cache import ResponseCache
from ..backends.http import HttpGenerationBackend, HttpJudgeBackend, HttpRewardBackend
from ..backends.mock import MockGenerationBackend, MockJudgeBackend, MockRewardBackend
from ..backends.synthetic import (
    SyntheticGenerationBackend,
    SyntheticJudgeBackend,
    SyntheticRewardBackend,
)
from ..backends.templates import TemplateSet
from ..errors import ConfigError, InvalidConfig
from ..metrics import (
    ExactMatchScorer,
    PluginScorer,
    RewardBackedScorer,
    SyntheticOracleScorer,
)
from ..sampling import SamplingPlan, build_plan
from ..selection import PairMode
from ..types import Strategy


@dataclass
class RunConfig:
    dataset_path: str
    plan: SamplingPlan
    strategies: list[Strategy]
    backend_descriptors: dict[str, BackendDescriptor]
    scorer_spec: dict[str, Any] | None = None
    baseline: str = "greedy_self"  # or "external"
    baseline_path: str | None = None
    pair_mode: PairMode = PairMode.SINGLE
    chops_checklist: bool = True
    length_normalized_likelihood: bool = False
    context_budget_tokens: int = 8192
    concurrency: int = 1
    cache_dir: str | None = None
    output_dir: str = "runs"
    run_id: str = "run"
    seed: int = 0
    template_dir: str | None = None

    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.run_id


_JUDGE_STRATEGIES = {Strategy.JUDGE_MBR, Strategy.XMBR, Strategy.CHOPS}


def _parse_descriptor(name: str, spec: dict[str, Any]) -> BackendDescriptor:
    try:
        kind = BackendKind(spec["kind"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"backend {name!r}: missing or unknown kind") from exc
    known = {"kind", "id", "endpoint", "model_name", "auth_env_var", "max_concurrency", "timeout_s", "retry_limit"}
    options = {k: v for k, v in spec.items() if k not in known}
    try:
        return BackendDescriptor(
            id=spec.get("id", name),
            kind=kind,
            endpoint=spec.get("endpoint"),
            model_name=spec.get("model_name"),
            auth_env_var=spec.get("auth_env_var"),
            max_concurrency=int(spec.get("max_concurrency", 4)),
            timeout_s=float(spec.get("timeout_s", 60.0)),
            retry_limit=int(spec.get("retry_limit", 2)),
            options=options,
        )
    except InvalidConfig as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return parse_config(raw)


def parse_config(raw: dict[str, Any]) -> RunConfig:
    try:
        dataset_path = raw["dataset"]
    except KeyError as exc:
        raise ConfigError("config needs a 'dataset' path") from exc

    plan_spec = dict(raw.get("plan", {}))
    try:
        plan = build_plan(**plan_spec)
    except (InvalidConfig, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid plan: {exc}") from exc

    try:
        strategies = [Strategy(s) for s in raw.get("strategies", ["judge_mbr"])]
    except ValueError as exc:
        raise ConfigError(f"unknown strategy: {exc}") from exc

    backends_spec = raw.get("backends", {})
    descriptors = {name: _parse_descriptor(name, spec) for name, spec in backends_spec.items()}

    baseline_spec = raw.get("baseline", "greedy_self")
    if isinstance(baseline_spec, dict):
        baseline, baseline_path = "external", baseline_spec.get("external")
        if not baseline_path:
            raise ConfigError("external baseline needs a path to baseline outputs")
    else:
        baseline, baseline_path = str(baseline_spec), None
        if baseline not in ("greedy_self",):
            raise ConfigError(f"unknown baseline {baseline!r}")

    config = RunConfig(
        dataset_path=dataset_path,
        plan=plan,
        strategies=strategies,
        backend_descriptors=descriptors,
        scorer_spec=raw.get("scorer"),
        baseline=baseline,
        baseline_path=baseline_path,
        pair_mode=PairMode(raw.get("pair_mode", "single")),
        chops_checklist=bool(raw.get("chops_checklist", True)),
        length_normalized_likelihood=bool(raw.get("length_normalized_likelihood", False)),
        context_budget_tokens=int(raw.get("context_budget_tokens", 8192)),
        concurrency=int(raw.get("concurrency", 1)),
        cache_dir=raw.get("cache_dir"),
        output_dir=raw.get("output_dir", "runs"),
        run_id=str(raw.get("run_id", "run")),
        seed=int(raw.get("seed", plan.seed)),
        template_dir=raw.get("template_dir"),
    )
    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:
    """Check every requested strategy has its backend role configured."""
    roles = config.backend_descriptors
    if "generator" not in roles:
        raise ConfigError("a 'generator' backend is required")
    if any(s in _JUDGE_STRATEGIES for s in config.strategies) and "judge" not in roles:
        raise ConfigError("judge_mbr/xmbr/chops need a 'judge' backend")
    if Strategy.REWARD_BON in config.strategies and "reward" not in roles:
        raise ConfigError("reward_bon needs a 'reward' backend")
    if Strategy.LIKELIHOOD in config.strategies and roles["generator"].kind is BackendKind.SYNTHETIC:
        raise ConfigError("likelihood needs a generator that reports token logprobs")
    if Strategy.XMBR in config.strategies and config.plan.evidence_m < 1:
        raise ConfigError("xmbr needs plan.evidence_m >= 1")


_GENERATION_CLASSES = {
    BackendKind.HTTP_GENERATION: HttpGenerationBackend,
    BackendKind.MOCK: MockGenerationBackend,
    BackendKind.SYNTHETIC: SyntheticGenerationBackend,
}
_JUDGE_CLASSES = {
    BackendKind.HTTP_JUDGE: HttpJudgeBackend,
    BackendKind.MOCK: MockJudgeBackend,
    BackendKind.SYNTHETIC: SyntheticJudgeBackend,
}
_REWARD_CLASSES = {
    BackendKind.HTTP_REWARD: HttpRewardBackend,
    BackendKind.MOCK: MockRewardBackend,
    BackendKind.SYNTHETIC: SyntheticRewardBackend,
}


@dataclass
class Runtime:
    """Instantiated backends, templates, cache, and scorer for one run."""

    config: RunConfig
    generator: Any
    templates: TemplateSet
    cache: ResponseCache | None = None
    judge: Any = None
    eval_judge: Any = None
    reward: Any = None
    scorer: Any = None
    baseline_texts: dict[str, str] = field(default_factory=dict)


def build_runtime(config: RunConfig, cache: ResponseCache | None = None) -> Runtime:
    if cache is None and config.cache_dir:
        cache = ResponseCache(Path(config.cache_dir) / "responses.jsonl")

    def instantiate(role: str, classes: dict[BackendKind, type]):
        descriptor = config.backend_descriptors.get(role)
        if descriptor is None:
            return None
        try:
            cls = classes[descriptor.kind]
        except KeyError as exc:
            raise ConfigError(f"backend role {role!r} cannot use kind {descriptor.kind.value!r}") from exc
        return cls(descriptor, cache=cache)

    generator = instantiate("generator", _GENERATION_CLASSES)
    judge = instantiate("judge", _JUDGE_CLASSES)
    eval_judge = instantiate("eval_judge", _JUDGE_CLASSES) or judge
    reward = instantiate("reward", _REWARD_CLASSES)

    scorer = None
    spec = config.scorer_spec
    if spec:
        kind = spec.get("kind")
        if kind == "reward_backed":
            backend = reward if spec.get("role", "reward") == "reward" else None
            if backend is None:
                raise ConfigError("reward_backed scorer needs the 'reward' backend role")
            scorer = RewardBackedScorer(backend)
        elif kind == "exact_match":
            markers = spec.get("markers")
            scorer = ExactMatchScorer(tuple(markers)) if markers else ExactMatchScorer()
        elif kind == "synthetic_oracle":
            scorer = SyntheticOracleScorer()
        elif kind == "reference_plugin":
            scorer = PluginScorer(spec["command"], timeout_s=float(spec.get("timeout_s", 120.0)))
        else:
            raise ConfigError(f"unknown scorer kind {kind!r}")

    return Runtime(
        config=config,
        generator=generator,
        templates=TemplateSet(config.template_dir),
        cache=cache,
        judge=judge,
        eval_judge=eval_judge,
        reward=reward,
        scorer=scorer,
    )
