"""Mock backend determinism and the token-level sampler."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import descriptor, make_prompt
from parascale.backends.base import CallTally
from parascale.backends.cache import ResponseCache
from parascale.backends.judging import judge_pairwise, reward_score
from parascale.backends.mock import MockGenerationBackend, MockRewardBackend, sample_token
from parascale.backends.base import Verdict
from parascale.errors import MalformedResponse, NonFiniteLogits
from parascale.types import DecodeParams, LanguageTag


class TestSampleToken:
    def test_greedy_returns_argmax(self):
        logits = [0.1, 2.0, -1.0, 1.9]
        params = DecodeParams(temperature=0.0, min_p=0.5)
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert sample_token(logits, params, rng) == 1

    def test_min_p_prunes_hand_example(self):
        # probs [0.5, 0.3, 0.15, 0.05] at temperature 1: threshold is
        # 0.2 * 0.5 = 0.1, so token 3 (p=0.05) is never sampled while
        # tokens 0-2 all remain reachable.
        probs = np.array([0.5, 0.3, 0.15, 0.05])
        logits = np.log(probs)
        params = DecodeParams(temperature=1.0, min_p=0.2)
        rng = np.random.default_rng(7)
        seen = {sample_token(logits, params, rng) for _ in range(2000)}
        assert 3 not in seen
        assert seen == {0, 1, 2}

    def test_min_p_zero_keeps_full_support(self):
        probs = np.array([0.5, 0.3, 0.15, 0.05])
        params = DecodeParams(temperature=1.0, min_p=0.0)
        rng = np.random.default_rng(7)
        seen = {sample_token(np.log(probs), params, rng) for _ in range(5000)}
        assert seen == {0, 1, 2, 3}

    def test_peak_token_always_survives_extreme_min_p(self):
        logits = [0.0, 0.0, 10.0]
        params = DecodeParams(temperature=0.5, min_p=1.0)
        rng = np.random.default_rng(1)
        assert all(sample_token(logits, params, rng) == 2 for _ in range(50))

    def test_non_finite_logits_rejected(self):
        params = DecodeParams(temperature=1.0)
        rng = np.random.default_rng(0)
        with pytest.raises(NonFiniteLogits):
            sample_token([1.0, math.inf], params, rng)
        with pytest.raises(NonFiniteLogits):
            sample_token([], params, rng)

    def test_renormalization_shifts_mass_to_survivors(self):
        # With min_p=0.2 only tokens 0-2 survive; their renormalized
        # probabilities are p/0.95.  Check empirically.
        probs = np.array([0.5, 0.3, 0.15, 0.05])
        params = DecodeParams(temperature=1.0, min_p=0.2)
        rng = np.random.default_rng(123)
        draws = np.array([sample_token(np.log(probs), params, rng) for _ in range(20000)])
        freq0 = float(np.mean(draws == 0))
        assert abs(freq0 - 0.5 / 0.95) < 0.02


class TestMockGeneration:
    def test_greedy_same_prompt_twice_identical(self, mock_generator):
        prompt = make_prompt()
        params = DecodeParams(temperature=0.0, max_tokens=32)
        a = mock_generator.generate(prompt, params, n=1)
        b = mock_generator.generate(prompt, params, n=1)
        assert a[0].text == b[0].text

    def test_seeded_batch_reproduces_exactly(self, mock_generator):
        prompt = make_prompt()
        params = DecodeParams(temperature=0.7, min_p=0.2, max_tokens=32, seed=11)
        first = mock_generator.generate(prompt, params, n=5)
        second = mock_generator.generate(prompt, params, n=5)
        assert [s.text for s in first] == [s.text for s in second]
        assert [s.token_logprobs for s in first] == [s.token_logprobs for s in second]
        assert len({s.text for s in first}) > 1  # stochastic draws differ across the batch

    def test_different_seeds_differ(self, mock_generator):
        prompt = make_prompt()
        a = mock_generator.generate(prompt, DecodeParams(temperature=0.7, seed=1), n=1)
        b = mock_generator.generate(prompt, DecodeParams(temperature=0.7, seed=2), n=1)
        assert a[0].text != b[0].text

    def test_greedy_rejects_n_greater_than_one(self, mock_generator):
        with pytest.raises(ValueError):
            mock_generator.generate(make_prompt(), DecodeParams(temperature=0.0), n=2)

    def test_respond_in_stamps_language_and_changes_text(self, mock_generator):
        prompt = make_prompt(language="en")
        params = DecodeParams(temperature=0.7, seed=3)
        plain = mock_generator.generate(prompt, params, n=1)[0]
        cross = mock_generator.generate(prompt, params, n=1, respond_in=LanguageTag("zh"))[0]
        assert cross.language.code == "zh"
        assert plain.language.code == "en"
        assert cross.text != plain.text  # the instruction prefix changes the context

    def test_logprobs_are_negative_and_per_token(self, mock_generator):
        sample = mock_generator.generate(make_prompt(), DecodeParams(temperature=0.7, seed=5), n=1)[0]
        assert sample.token_logprobs is not None
        assert len(sample.token_logprobs) == len(sample.text.split())
        assert all(lp < 0 for lp in sample.token_logprobs)

    def test_tally_counts_invocations_and_cache_hits(self, tmp_path):
        cache = ResponseCache(tmp_path / "c.jsonl")
        backend = MockGenerationBackend(descriptor(), cache=cache)
        tally = CallTally()
        params = DecodeParams(temperature=0.7, seed=1)
        backend.generate(make_prompt(), params, n=1, tally=tally)
        backend.generate(make_prompt(), params, n=1, tally=tally)
        ledger = tally.freeze()
        assert ledger.generation_calls == 1
        assert ledger.cached_hits == 1

    def test_injected_failures(self):
        backend = MockGenerationBackend(descriptor(fail_ids=["bad"]))
        with pytest.raises(MalformedResponse):
            backend.generate(make_prompt(pid="bad"), DecodeParams(temperature=0.7), n=1)


class TestMockJudge:
    def test_prefer_longer(self, mock_judge_longer, templates):
        pref = judge_pairwise(mock_judge_longer, "q", "a much longer answer", "short", templates)
        assert pref.verdict is Verdict.FIRST_WINS

    def test_identical_texts_tie(self, mock_judge_longer, templates):
        pref = judge_pairwise(mock_judge_longer, "q", "same text", "same text", templates)
        assert pref.verdict is Verdict.TIE

    def test_one_pass_picks_rule_argmax(self, mock_judge_longer, templates):
        from parascale.backends.judging import judge_one_pass

        texts = ["aa", "aaaa", "aaa"]
        chosen, raw = judge_one_pass(mock_judge_longer, "q", texts, templates)
        assert chosen == 1
        assert "Best response: 2" in raw


class TestMockJudgeRules:
    def test_alphabetical_rule(self, templates):
        from parascale.backends.mock import MockJudgeBackend

        judge = MockJudgeBackend(descriptor(rule="alphabetical"))
        pref = judge_pairwise(judge, "q", "apple pie", "banana split", templates)
        assert pref.verdict is Verdict.FIRST_WINS
        pref = judge_pairwise(judge, "q", "zebra", "aardvark", templates)
        assert pref.verdict is Verdict.SECOND_WINS

    def test_unknown_rule_rejected(self):
        from parascale.backends.mock import MockJudgeBackend

        with pytest.raises(ValueError):
            MockJudgeBackend(descriptor(rule="nonsense"))


class TestMockReward:
    def test_constant_and_overlap_rules(self):
        from parascale.backends.mock import MockRewardBackend

        constant = MockRewardBackend(descriptor(rule="constant", value=0.3))
        assert constant.score("p", "anything") == 0.3
        overlap = MockRewardBackend(descriptor(rule="word_overlap"))
        full = overlap.score("alpha beta", "alpha beta")
        partial = overlap.score("alpha beta", "alpha gamma")
        assert full > partial > 0.0

    def test_length_rule_arithmetic(self, mock_reward):
        # 250 characters at the length/1000 rule scores exactly 0.25.
        score = reward_score(mock_reward, "prompt", "x" * 250)
        assert score == pytest.approx(0.25)

    def test_clipped_at_one(self, mock_reward):
        assert reward_score(mock_reward, "prompt", "y" * 5000) == 1.0

    def test_cache_hit_returns_identical_score(self, tmp_path):
        cache = ResponseCache(tmp_path / "c.jsonl")
        backend = MockRewardBackend(descriptor(rule="length_over_1000"), cache=cache)
        tally = CallTally()
        first = reward_score(backend, "p", "hello there", tally=tally)
        second = reward_score(backend, "p", "hello there", tally=tally)
        assert first == second
        ledger = tally.freeze()
        assert ledger.reward_calls == 1
        assert ledger.cached_hits == 1
