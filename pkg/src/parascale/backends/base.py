"""Backend descriptors, call accounting, and the shared request plumbing."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from ..errors import InvalidConfig
from ..types import CallLedger
from .cache import ResponseCache
from .keys import content_key


class BackendKind(Enum):
    HTTP_GENERATION = "http_generation"
    HTTP_JUDGE = "http_judge"
    HTTP_REWARD = "http_reward"
    MOCK = "mock"
    SYNTHETIC = "synthetic"


_HTTP_KINDS = {BackendKind.HTTP_GENERATION, BackendKind.HTTP_JUDGE, BackendKind.HTTP_REWARD}


@dataclass(frozen=True)
class BackendDescriptor:
    """Static description of one backend: where it lives and how hard to push it."""

    id: str
    kind: BackendKind
    endpoint: str | None = None
    model_name: str | None = None
    auth_env_var: str | None = None
    max_concurrency: int = 4
    timeout_s: float = 60.0
    retry_limit: int = 2
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.max_concurrency < 1:
            raise InvalidConfig("max_concurrency must be positive")
        if self.kind in _HTTP_KINDS:
            if not self.endpoint or not self.model_name:
                raise InvalidConfig(f"backend {self.id!r}: HTTP kinds require endpoint and model_name")
        else:
            if self.endpoint or self.model_name:
                raise InvalidConfig(f"backend {self.id!r}: mock/synthetic backends take no endpoint or model_name")


class Verdict(Enum):
    FIRST_WINS = "first_wins"
    SECOND_WINS = "second_wins"
    TIE = "tie"


@dataclass(frozen=True, slots=True)
class Preference:
    """A parsed pairwise judgement; constructed only from parseable raw text."""

    verdict: Verdict
    raw_text: str


class CallTally:
    """Mutable, thread-safe counter that freezes into an immutable CallLedger."""

    _FIELDS = ("generation_calls", "judge_pairwise_calls", "judge_onepass_calls", "reward_calls", "cached_hits")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.generation_calls = 0
        self.judge_pairwise_calls = 0
        self.judge_onepass_calls = 0
        self.reward_calls = 0
        self.cached_hits = 0

    def add(self, fld: str, n: int = 1) -> None:
        if fld not in self._FIELDS:
            raise ValueError(f"unknown tally field {fld!r}")
        with self._lock:
            setattr(self, fld, getattr(self, fld) + n)

    def freeze(self) -> CallLedger:
        with self._lock:
            return CallLedger(
                generation_calls=self.generation_calls,
                judge_pairwise_calls=self.judge_pairwise_calls,
                judge_onepass_calls=self.judge_onepass_calls,
                reward_calls=self.reward_calls,
                cached_hits=self.cached_hits,
            )


class Backend:
    """Common machinery: per-descriptor concurrency cap plus optional cache."""

    def __init__(self, descriptor: BackendDescriptor, cache: ResponseCache | None = None):
        self.descriptor = descriptor
        self.cache = cache
        self._gate = threading.Semaphore(descriptor.max_concurrency)

    def _cached_call(
        self,
        kind: str,
        key_payload: dict[str, Any],
        thunk: Callable[[], Any],
        tally: CallTally | None,
        tally_field: str,
    ) -> Any:
        """Resolve through the cache when present; count exactly one live call per miss."""
        payload = dict(key_payload)
        payload["backend_id"] = self.descriptor.id
        payload["op"] = kind
        key = content_key(payload)

        def live() -> Any:
            with self._gate:
                result = thunk()
            if tally is not None:
                tally.add(tally_field)
            return result

        if self.cache is None:
            return live()
        response, hit = self.cache.lookup_or_call(key, kind, key, live)
        if hit and tally is not None:
            tally.add("cached_hits")
        return response
