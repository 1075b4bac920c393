"""Deterministic mock backends for offline runs and tests.

The mock generator is a tiny word-level language model: logits for each
step are a pure function of (prompt digest, previous token), and all
randomness derives from (seed, request) so equal configurations reproduce
bit-identical samples.
"""

from __future__ import annotations

import hashlib
import math
from typing import Callable

import numpy as np

from ..errors import MalformedResponse, NonFiniteLogits
from ..types import DecodeParams, LanguageTag, PromptRecord, Provenance, Sample
from .base import Backend, BackendDescriptor, CallTally
from .judging import JudgeRequest
from .keys import stable_seed
from .templates import apply_cross_lingual

_VOCAB = (
    "the a an it this that and or but so when while first next then finally "
    "number value answer result sum total point line model data set step "
    "small large quick slow clear exact rough fair deep wide open plain "
    "river stone cloud light sound paper garden window bridge signal"
).split()


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def sample_token(logits: np.ndarray | list[float], params: DecodeParams, rng: np.random.Generator) -> int:
    """Draw one token index under temperature and min-p pruning.

    Greedy (temperature 0) returns the argmax.  Otherwise the distribution
    is softmax(logits / temperature) with tokens below min_p times the peak
    probability removed and the rest renormalized.  The peak token always
    survives, so the support is never empty.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0 or not np.all(np.isfinite(logits)):
        raise NonFiniteLogits("logits must be non-empty and finite")
    if params.greedy:
        return int(np.argmax(logits))
    probs = _softmax(logits / params.temperature)
    if params.min_p > 0.0:
        keep = probs >= params.min_p * probs.max()
        probs = np.where(keep, probs, 0.0)
        probs = probs / probs.sum()
    return int(rng.choice(logits.size, p=probs))


class MockGenerationBackend(Backend):
    """Seeded word-salad generator with true token log-probabilities."""

    provides_logprobs = True

    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)
        self._vocab_seed = int(descriptor.options.get("vocab_seed", 0))
        self._logit_cache: dict[tuple[str, int], np.ndarray] = {}
        # Fault injection for tests: fail whole prompts or individual slots.
        self._fail_ids = set(descriptor.options.get("fail_ids", ()))
        self._fail_seeds = set(descriptor.options.get("fail_seeds", ()))

    def _logits(self, prompt_digest: str, prev_token: int) -> np.ndarray:
        key = (prompt_digest, prev_token)
        cached = self._logit_cache.get(key)
        if cached is None:
            rng = np.random.default_rng(stable_seed("mock-lm", self._vocab_seed, prompt_digest, prev_token))
            cached = rng.standard_normal(len(_VOCAB)) * 2.0
            self._logit_cache[key] = cached
        return cached

    def _one_sample(self, rendered_prompt: str, params: DecodeParams, index: int) -> tuple[str, list[float]]:
        digest = hashlib.sha256(rendered_prompt.encode("utf-8")).hexdigest()
        rng = np.random.default_rng(
            stable_seed("mock-gen", self.descriptor.id, digest, params.seed, index)
        )
        if params.greedy:
            length = min(params.max_tokens, 12)
        else:
            length = min(params.max_tokens, 8 + int(rng.integers(0, 9)))
        prev = -1
        words: list[str] = []
        logprobs: list[float] = []
        for _ in range(length):
            logits = self._logits(digest, prev)
            tok = sample_token(logits, params, rng)
            # Report the raw model distribution's logprob, as OpenAI-style
            # APIs do, independent of temperature and pruning.
            logprobs.append(float(np.log(_softmax(logits)[tok])))
            words.append(_VOCAB[tok])
            prev = tok
        return " ".join(words), logprobs

    def generate(
        self,
        prompt: PromptRecord,
        params: DecodeParams,
        n: int = 1,
        respond_in: LanguageTag | None = None,
        tally: CallTally | None = None,
    ) -> list[Sample]:
        if n < 1:
            raise ValueError("n must be >= 1")
        if params.greedy and n != 1:
            raise ValueError("greedy decoding yields one sample; request n=1")
        if prompt.id in self._fail_ids or params.seed in self._fail_seeds:
            raise MalformedResponse(f"injected failure for prompt {prompt.id!r} seed {params.seed}")
        rendered = apply_cross_lingual(prompt.text, respond_in.code if respond_in else None)
        language = respond_in or prompt.language

        def live() -> list[dict]:
            out = []
            for i in range(n):
                text, logprobs = self._one_sample(rendered, params, i)
                out.append({"text": text, "token_logprobs": logprobs})
            return out

        payload = {"prompt": rendered, "params": params.to_dict(), "n": n, "language": language.code}
        raw = self._cached_call("generate", payload, live, tally, "generation_calls")
        provenance = Provenance.GREEDY if params.greedy else Provenance.STOCHASTIC
        return [
            Sample(
                text=r["text"],
                params=params,
                language=language,
                provenance=provenance,
                token_logprobs=tuple(r["token_logprobs"]),
            )
            for r in raw
        ]


def _rule_metric(rule: str) -> Callable[[str], float]:
    if rule == "longer":
        return lambda text: float(len(text))
    if rule == "shorter":
        return lambda text: -float(len(text))
    if rule == "alphabetical":
        # Earlier alphabetical order wins; metric must be higher-is-better.
        return lambda text: -sum(ord(c) / 256.0 ** (i + 1) for i, c in enumerate(text[:8]))
    raise ValueError(f"unknown mock judge rule {rule!r}")


class MockJudgeBackend(Backend):
    """Judge whose verdicts follow a configured deterministic rule."""

    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)
        self._metric = _rule_metric(descriptor.options.get("rule", "longer"))

    def complete(self, request: JudgeRequest, tally: CallTally | None = None) -> str:
        def live() -> str:
            scores = [self._metric(t) for t in request.candidate_texts]
            if request.kind == "pairwise":
                a, b = scores
                if a > b:
                    return "Winner: A"
                if b > a:
                    return "Winner: B"
                return "Winner: Tie"
            best = max(range(len(scores)), key=lambda i: (scores[i], -i))
            return f"Ranked by the configured rule.\nBest response: {best + 1}"

        payload = {"rendered": request.rendered_prompt, "template": request.template_version}
        field = "judge_pairwise_calls" if request.kind == "pairwise" else "judge_onepass_calls"
        return self._cached_call(f"judge_{request.kind}", payload, live, tally, field)


class ScriptedJudgeBackend(Backend):
    """Replays a fixed list of raw responses; for exercising parse handling."""

    def __init__(self, descriptor: BackendDescriptor, responses: list[str], cache=None):
        super().__init__(descriptor, cache)
        self._responses = list(responses)
        self._cursor = 0

    def complete(self, request: JudgeRequest, tally: CallTally | None = None) -> str:
        def live() -> str:
            if self._cursor >= len(self._responses):
                raise MalformedResponse("scripted judge ran out of responses")
            text = self._responses[self._cursor]
            self._cursor += 1
            return text

        payload = {"rendered": request.rendered_prompt, "cursor": self._cursor}
        field = "judge_pairwise_calls" if request.kind == "pairwise" else "judge_onepass_calls"
        return self._cached_call(f"judge_{request.kind}", payload, live, tally, field)


class MockRewardBackend(Backend):
    """Reward scores from a named deterministic rule."""

    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)
        rule = descriptor.options.get("rule", "length_over_1000")
        if rule == "length_over_1000":
            self._fn = lambda prompt, text: min(len(text) / 1000.0, 1.0)
        elif rule == "word_overlap":
            self._fn = _word_overlap
        elif rule == "constant":
            value = float(descriptor.options.get("value", 0.5))
            self._fn = lambda prompt, text: value
        else:
            raise ValueError(f"unknown mock reward rule {rule!r}")

    def score(self, prompt_text: str, candidate_text: str, tally: CallTally | None = None) -> float:
        if not candidate_text:
            raise MalformedResponse("cannot score an empty candidate")
        payload = {"prompt": prompt_text, "candidates": [candidate_text]}
        return self._cached_call(
            "reward", payload, lambda: float(self._fn(prompt_text, candidate_text)), tally, "reward_calls"
        )


def _word_overlap(prompt_text: str, candidate_text: str) -> float:
    p = set(prompt_text.split())
    c = set(candidate_text.split())
    if not p or not c:
        return 0.0
    return len(p & c) / math.sqrt(len(p) * len(c))
