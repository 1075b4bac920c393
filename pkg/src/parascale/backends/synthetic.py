"""Synthetic quality simulator.

Generation draws a hidden quality scalar per sample from a per-language
profile: mean quality decays quadratically once temperature passes the
profile's breakpoint, and spread grows linearly with temperature, so
greedy output is deterministic and high temperatures trade upside for
variance.  The quality is embedded in the sample text as a leading
``q=<value>`` tag over shared per-prompt filler, which lets judges,
reward scorers, and oracle metrics recover it from the text alone.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from ..errors import MalformedResponse
from ..types import DecodeParams, LanguageTag, PromptRecord, Provenance, Sample
from .base import Backend, BackendDescriptor, CallTally
from .judging import JudgeRequest
from .keys import stable_seed
from .templates import apply_cross_lingual

_QUALITY_RE = re.compile(r"^q=(-?[0-9]+(?:\.[0-9]+)?)\s")

_FILLER_WORDS = (
    "amber basin cedar delta ember fjord grove harbor inlet juniper "
    "karst lagoon meadow north orchard prairie quarry ridge summit tundra"
).split()


@dataclass(frozen=True, slots=True)
class SyntheticProfile:
    """Per-language quality response to temperature."""

    base_quality: float
    breakpoint: float
    decay_rate: float
    noise_rate: float

    def __post_init__(self) -> None:
        if not 0.0 < self.base_quality <= 1.0:
            raise ValueError("base_quality must be in (0, 1]")
        if self.breakpoint < 0 or self.decay_rate < 0 or self.noise_rate < 0:
            raise ValueError("breakpoint, decay_rate, noise_rate must be >= 0")

    def mean_quality(self, temperature: float) -> float:
        over = max(0.0, temperature - self.breakpoint)
        return self.base_quality - self.decay_rate * over * over

    def std_dev(self, temperature: float) -> float:
        return self.noise_rate * temperature


# Defaults mirror the empirical picture: English stays stable to higher
# temperatures while other languages decay earlier and spread wider.
DEFAULT_ENGLISH_PROFILE = SyntheticProfile(base_quality=0.6, breakpoint=0.9, decay_rate=0.4, noise_rate=0.15)
DEFAULT_NON_ENGLISH_PROFILE = SyntheticProfile(base_quality=0.5, breakpoint=0.4, decay_rate=0.4, noise_rate=0.3)


def profile_from_options(options: dict) -> SyntheticProfile:
    return SyntheticProfile(
        base_quality=float(options.get("base_quality", 0.5)),
        breakpoint=float(options.get("breakpoint", 0.4)),
        decay_rate=float(options.get("decay_rate", 0.4)),
        noise_rate=float(options.get("noise_rate", 0.3)),
    )


def resolve_profiles(options: dict) -> dict[str, SyntheticProfile]:
    """Build the per-language profile map from descriptor options."""
    profiles: dict[str, SyntheticProfile] = {}
    for code, spec in options.get("profiles", {}).items():
        profiles[code] = profile_from_options(spec)
    return profiles


def hidden_quality(text: str) -> float:
    """Recover the quality scalar embedded in a synthetic sample's text."""
    m = _QUALITY_RE.match(text)
    if m is None:
        raise MalformedResponse(f"no quality tag in synthetic text: {text[:60]!r}")
    return float(m.group(1))


def _filler(prompt_text: str, language_code: str) -> str:
    digest = hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()
    rng = np.random.default_rng(stable_seed("synth-filler", digest, language_code))
    words = [_FILLER_WORDS[int(i)] for i in rng.integers(0, len(_FILLER_WORDS), size=12)]
    return " ".join(words)


class SyntheticGenerationBackend(Backend):
    """Generator whose outputs carry hidden quality scalars."""

    provides_logprobs = False

    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)
        self._profiles = resolve_profiles(descriptor.options)

    def profile_for(self, language: LanguageTag) -> SyntheticProfile:
        if language.code in self._profiles:
            return self._profiles[language.code]
        return DEFAULT_ENGLISH_PROFILE if language.is_english else DEFAULT_NON_ENGLISH_PROFILE

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
        rendered = apply_cross_lingual(prompt.text, respond_in.code if respond_in else None)
        language = respond_in or prompt.language
        profile = self.profile_for(language)
        filler = _filler(prompt.text, language.code)

        def live() -> list[dict]:
            out = []
            for i in range(n):
                if params.greedy:
                    q = profile.base_quality
                else:
                    # Deliberately unclipped: a continuous quality scalar
                    # keeps sample texts distinct almost surely, so text
                    # similarity between distinct samples stays uniform.
                    rng = np.random.default_rng(
                        stable_seed("synth-q", self.descriptor.id, rendered, language.code, params.seed, i)
                    )
                    q = profile.mean_quality(params.temperature) + profile.std_dev(
                        params.temperature
                    ) * float(rng.standard_normal())
                out.append({"text": f"q={q:.12f} {filler}"})
            return out

        payload = {"prompt": rendered, "params": params.to_dict(), "n": n, "language": language.code}
        raw = self._cached_call("generate", payload, live, tally, "generation_calls")
        provenance = Provenance.GREEDY if params.greedy else Provenance.STOCHASTIC
        return [
            Sample(text=r["text"], params=params, language=language, provenance=provenance)
            for r in raw
        ]


class SyntheticJudgeBackend(Backend):
    """Judge that compares hidden qualities; flips verdicts with probability flip_noise."""

    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)
        self.flip_noise = float(descriptor.options.get("flip_noise", 0.0))

    def _noise_rng(self, request: JudgeRequest) -> np.random.Generator:
        return np.random.default_rng(
            stable_seed("synth-judge", self.descriptor.id, request.rendered_prompt)
        )

    def complete(self, request: JudgeRequest, tally: CallTally | None = None) -> str:
        def live() -> str:
            qualities = [hidden_quality(t) for t in request.candidate_texts]
            rng = self._noise_rng(request)
            if request.kind == "pairwise":
                a, b = qualities
                if a > b:
                    verdict = "A"
                elif b > a:
                    verdict = "B"
                else:
                    verdict = "Tie"
                if verdict != "Tie" and self.flip_noise > 0 and rng.random() < self.flip_noise:
                    verdict = "B" if verdict == "A" else "A"
                return f"Winner: {verdict}"
            best = max(range(len(qualities)), key=lambda i: (qualities[i], -i))
            if self.flip_noise > 0 and len(qualities) > 1 and rng.random() < self.flip_noise:
                others = [i for i in range(len(qualities)) if i != best]
                best = int(others[int(rng.integers(0, len(others)))])
            return f"Checklist: compare the hidden quality of each candidate.\nBest response: {best + 1}"

        payload = {"rendered": request.rendered_prompt, "template": request.template_version}
        field = "judge_pairwise_calls" if request.kind == "pairwise" else "judge_onepass_calls"
        return self._cached_call(f"judge_{request.kind}", payload, live, tally, field)


class SyntheticRewardBackend(Backend):
    """Reward model that reads back the hidden quality scalar."""

    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)

    def score(self, prompt_text: str, candidate_text: str, tally: CallTally | None = None) -> float:
        if not candidate_text:
            raise MalformedResponse("cannot score an empty candidate")
        payload = {"prompt": prompt_text, "candidates": [candidate_text]}
        return self._cached_call("reward", payload, lambda: hidden_quality(candidate_text), tally, "reward_calls")
