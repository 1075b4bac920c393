"""Live backends speaking the OpenAI-compatible chat-completions protocol."""

from __future__ import annotations

import logging
import os
import re
import time
from typing import Any

import requests

from ..errors import AuthMissing, BackendTimeout, MalformedResponse
from ..types import DecodeParams, LanguageTag, PromptRecord, Provenance, Sample
from .base import Backend, BackendDescriptor, CallTally
from .judging import JudgeRequest
from .templates import apply_cross_lingual

logger = logging.getLogger(__name__)

_FLOAT_RE = re.compile(r"-?\d+(?:\.\d+)?")

_REWARD_PROMPT = (
    "Rate how well the response answers the prompt, on a continuous scale "
    "from 0 (useless) to 1 (excellent).\n\nPrompt:\n{prompt}\n\nResponse:\n{candidate}\n\n"
    "Reply with only the number."
)


class _ChatClient(Backend):
    """Shared POST/retry/auth plumbing for the chat-completions endpoint."""

    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)
        endpoint = descriptor.endpoint.rstrip("/")
        if not endpoint.endswith("/chat/completions"):
            endpoint = endpoint + "/chat/completions"
        self._url = endpoint
        self._backoff_s = float(descriptor.options.get("backoff_s", 0.5))
        self._session = requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.descriptor.auth_env_var:
            token = os.environ.get(self.descriptor.auth_env_var)
            if not token:
                raise AuthMissing(f"environment variable {self.descriptor.auth_env_var!r} is not set")
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, body: dict[str, Any]) -> dict[str, Any]:
        headers = self._headers()
        last_error: Exception | None = None
        for attempt in range(self.descriptor.retry_limit + 1):
            if attempt > 0:
                time.sleep(self._backoff_s * 2 ** (attempt - 1))
            try:
                resp = self._session.post(self._url, json=body, headers=headers, timeout=self.descriptor.timeout_s)
            except (requests.Timeout, requests.ConnectionError) as exc:
                last_error = exc
                logger.warning("%s: attempt %d failed: %s", self.descriptor.id, attempt + 1, exc)
                continue
            if resp.status_code >= 500:
                last_error = MalformedResponse(f"server error {resp.status_code}")
                logger.warning("%s: attempt %d got status %d", self.descriptor.id, attempt + 1, resp.status_code)
                continue
            if resp.status_code != 200:
                raise MalformedResponse(f"{self.descriptor.id}: status {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise MalformedResponse(f"{self.descriptor.id}: non-JSON response") from exc
        raise BackendTimeout(f"{self.descriptor.id}: gave up after {self.descriptor.retry_limit + 1} attempts") from last_error

    def _chat(self, content: str, params: DecodeParams, n: int, want_logprobs: bool) -> list[dict[str, Any]]:
        body: dict[str, Any] = {
            "model": self.descriptor.model_name,
            "messages": [{"role": "user", "content": content}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "n": n,
        }
        if want_logprobs:
            body["logprobs"] = True
        if params.seed is not None:
            body["seed"] = params.seed
        if params.min_p > 0 and not params.greedy:
            body["min_p"] = params.min_p
        if params.greedy:
            body["top_k"] = 1
        data = self._post(body)
        try:
            choices = data["choices"]
            out = []
            for choice in choices:
                text = choice["message"]["content"]
                logprobs = None
                lp = choice.get("logprobs")
                if lp and lp.get("content"):
                    logprobs = [tok["logprob"] for tok in lp["content"]]
                out.append({"text": text, "token_logprobs": logprobs})
            return out
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"{self.descriptor.id}: unexpected response shape: {exc}") from exc


class HttpGenerationBackend(_ChatClient):
    provides_logprobs = True

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
        payload = {"prompt": rendered, "params": params.to_dict(), "n": n, "language": language.code}
        raw = self._cached_call(
            "generate", payload, lambda: self._chat(rendered, params, n, want_logprobs=True), tally, "generation_calls"
        )
        if len(raw) != n:
            raise MalformedResponse(f"{self.descriptor.id}: asked for {n} choices, got {len(raw)}")
        provenance = Provenance.GREEDY if params.greedy else Provenance.STOCHASTIC
        return [
            Sample(
                text=r["text"],
                params=params,
                language=language,
                provenance=provenance,
                token_logprobs=tuple(r["token_logprobs"]) if r.get("token_logprobs") else None,
            )
            for r in raw
        ]


class HttpJudgeBackend(_ChatClient):
    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)
        self._params = DecodeParams(temperature=0.0, max_tokens=int(descriptor.options.get("max_tokens", 1024)))

    def complete(self, request: JudgeRequest, tally: CallTally | None = None) -> str:
        payload = {"rendered": request.rendered_prompt, "template": request.template_version}
        field = "judge_pairwise_calls" if request.kind == "pairwise" else "judge_onepass_calls"

        def live() -> str:
            choices = self._chat(request.rendered_prompt, self._params, 1, want_logprobs=False)
            return choices[0]["text"]

        return self._cached_call(f"judge_{request.kind}", payload, live, tally, field)


class HttpRewardBackend(_ChatClient):
    """Adapter that scores via the chat endpoint when no native reward API exists."""

    def __init__(self, descriptor: BackendDescriptor, cache=None):
        super().__init__(descriptor, cache)
        self._params = DecodeParams(temperature=0.0, max_tokens=int(descriptor.options.get("max_tokens", 16)))

    def score(self, prompt_text: str, candidate_text: str, tally: CallTally | None = None) -> float:
        if not candidate_text:
            raise MalformedResponse("cannot score an empty candidate")
        payload = {"prompt": prompt_text, "candidates": [candidate_text]}

        def live() -> float:
            content = _REWARD_PROMPT.format(prompt=prompt_text, candidate=candidate_text)
            choices = self._chat(content, self._params, 1, want_logprobs=False)
            m = _FLOAT_RE.search(choices[0]["text"])
            if m is None:
                raise MalformedResponse(f"{self.descriptor.id}: no numeric score in {choices[0]['text'][:80]!r}")
            return float(m.group(0))

        return self._cached_call("reward", payload, live, tally, "reward_calls")
