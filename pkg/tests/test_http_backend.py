"""HTTP client against a local canned chat-completions server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from conftest import make_prompt
from parascale.backends.base import BackendDescriptor, BackendKind, CallTally
from parascale.backends.http import HttpGenerationBackend, HttpJudgeBackend, HttpRewardBackend
from parascale.backends.judging import JudgeRequest
from parascale.errors import AuthMissing, BackendTimeout, MalformedResponse
from parascale.types import DecodeParams


class _Handler(BaseHTTPRequestHandler):
    server_version = "FakeOpenAI/0.1"

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        self.server.requests.append({"path": self.path, "body": body, "headers": dict(self.headers)})
        script = self.server.script
        status, payload = script[min(len(self.server.requests) - 1, len(script) - 1)]
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def fake_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    server.requests = []
    server.script = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()


def chat_response(texts, logprobs=None):
    choices = []
    for i, text in enumerate(texts):
        choice = {"index": i, "message": {"role": "assistant", "content": text}}
        if logprobs is not None:
            choice["logprobs"] = {"content": [{"token": "t", "logprob": lp} for lp in logprobs[i]]}
        choices.append(choice)
    return {"id": "cmpl-1", "choices": choices}


def gen_descriptor(server, **kwargs) -> BackendDescriptor:
    defaults = dict(
        id="live",
        kind=BackendKind.HTTP_GENERATION,
        endpoint=f"http://127.0.0.1:{server.server_address[1]}/v1",
        model_name="test-model",
        timeout_s=2.0,
        retry_limit=1,
        options={"backoff_s": 0.0},
    )
    defaults.update(kwargs)
    return BackendDescriptor(**defaults)


class TestGeneration:
    def test_request_shape_and_response_parse(self, fake_server):
        fake_server.script = [(200, chat_response(["hello world"], logprobs=[[-0.1, -0.5]]))]
        backend = HttpGenerationBackend(gen_descriptor(fake_server))
        tally = CallTally()
        params = DecodeParams(temperature=0.7, min_p=0.2, max_tokens=64, seed=9)
        samples = backend.generate(make_prompt(), params, n=1, tally=tally)
        assert samples[0].text == "hello world"
        assert samples[0].token_logprobs == (-0.1, -0.5)
        assert tally.freeze().generation_calls == 1

        sent = fake_server.requests[0]
        assert sent["path"].endswith("/v1/chat/completions")
        body = sent["body"]
        assert body["model"] == "test-model"
        assert body["temperature"] == 0.7
        assert body["min_p"] == 0.2
        assert body["seed"] == 9
        assert body["logprobs"] is True

    def test_greedy_pins_temperature_zero_and_top_k(self, fake_server):
        fake_server.script = [(200, chat_response(["g"]))]
        backend = HttpGenerationBackend(gen_descriptor(fake_server))
        backend.generate(make_prompt(), DecodeParams(temperature=0.0, min_p=0.2), n=1)
        body = fake_server.requests[0]["body"]
        assert body["temperature"] == 0.0
        assert body["top_k"] == 1
        assert "min_p" not in body

    def test_retry_on_server_error_then_success(self, fake_server):
        fake_server.script = [(500, {"error": "boom"}), (200, chat_response(["ok"]))]
        backend = HttpGenerationBackend(gen_descriptor(fake_server))
        samples = backend.generate(make_prompt(), DecodeParams(temperature=0.7), n=1)
        assert samples[0].text == "ok"
        assert len(fake_server.requests) == 2

    def test_exhausted_retries_raise_timeout(self, fake_server):
        fake_server.script = [(500, {"error": "boom"})]
        backend = HttpGenerationBackend(gen_descriptor(fake_server))
        with pytest.raises(BackendTimeout):
            backend.generate(make_prompt(), DecodeParams(temperature=0.7), n=1)
        assert len(fake_server.requests) == 2  # retry_limit=1 means two attempts

    def test_malformed_response_shape(self, fake_server):
        fake_server.script = [(200, {"unexpected": True})]
        backend = HttpGenerationBackend(gen_descriptor(fake_server))
        with pytest.raises(MalformedResponse):
            backend.generate(make_prompt(), DecodeParams(temperature=0.7), n=1)

    def test_auth_missing(self, fake_server, monkeypatch):
        monkeypatch.delenv("TEST_API_TOKEN", raising=False)
        backend = HttpGenerationBackend(gen_descriptor(fake_server, auth_env_var="TEST_API_TOKEN"))
        with pytest.raises(AuthMissing):
            backend.generate(make_prompt(), DecodeParams(temperature=0.7), n=1)

    def test_bearer_token_sent(self, fake_server, monkeypatch):
        monkeypatch.setenv("TEST_API_TOKEN", "sekret")
        fake_server.script = [(200, chat_response(["ok"]))]
        backend = HttpGenerationBackend(gen_descriptor(fake_server, auth_env_var="TEST_API_TOKEN"))
        backend.generate(make_prompt(), DecodeParams(temperature=0.7), n=1)
        assert fake_server.requests[0]["headers"]["Authorization"] == "Bearer sekret"


class TestJudgeAndReward:
    def test_judge_complete_returns_content(self, fake_server):
        fake_server.script = [(200, chat_response(["Winner: A"]))]
        backend = HttpJudgeBackend(gen_descriptor(fake_server, kind=BackendKind.HTTP_JUDGE))
        tally = CallTally()
        request = JudgeRequest(
            kind="pairwise", rendered_prompt="compare these", prompt_text="q",
            candidate_texts=("a", "b"), template_version="v1",
        )
        assert backend.complete(request, tally=tally) == "Winner: A"
        assert tally.freeze().judge_pairwise_calls == 1
        assert fake_server.requests[0]["body"]["temperature"] == 0.0

    def test_reward_parses_number(self, fake_server):
        fake_server.script = [(200, chat_response(["0.85"]))]
        backend = HttpRewardBackend(gen_descriptor(fake_server, kind=BackendKind.HTTP_REWARD))
        assert backend.score("p", "candidate") == pytest.approx(0.85)

    def test_reward_without_number_is_malformed(self, fake_server):
        fake_server.script = [(200, chat_response(["great answer!"]))]
        backend = HttpRewardBackend(gen_descriptor(fake_server, kind=BackendKind.HTTP_REWARD))
        with pytest.raises(MalformedResponse):
            backend.score("p", "candidate")


def test_descriptor_requires_endpoint_for_http():
    from parascale.errors import InvalidConfig

    with pytest.raises(InvalidConfig):
        BackendDescriptor(id="x", kind=BackendKind.HTTP_GENERATION)
    with pytest.raises(InvalidConfig):
        BackendDescriptor(id="x", kind=BackendKind.MOCK, endpoint="http://nope")
