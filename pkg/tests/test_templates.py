"""Template rendering, verdict parsing, and the re-ask protocol."""

from __future__ import annotations

import pytest

from conftest import descriptor
from parascale.backends.base import Verdict
from parascale.backends.judging import judge_one_pass, judge_pairwise
from parascale.backends.mock import ScriptedJudgeBackend
from parascale.backends.templates import (
    TemplateSet,
    apply_cross_lingual,
    parse_one_pass_choice,
    parse_preference,
)
from parascale.errors import IndexOutOfRange, UnparseableVerdict


class TestParsing:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("Winner: A", Verdict.FIRST_WINS),
            ("winner: b", Verdict.SECOND_WINS),
            ("Some reasoning...\nWinner: Tie", Verdict.TIE),
            ("Winner: <B>", Verdict.SECOND_WINS),
            ("Winner: A\nWait, no.\nWinner: B", Verdict.SECOND_WINS),  # last verdict wins
            ("A", Verdict.FIRST_WINS),  # bare label after a re-ask
        ],
    )
    def test_parse_preference(self, raw, expected):
        assert parse_preference(raw) is expected

    @pytest.mark.parametrize("raw", ["no verdict here", "", "The winner is clear"])
    def test_parse_preference_failures(self, raw):
        assert parse_preference(raw) is None

    def test_parse_one_pass_zero_based(self):
        assert parse_one_pass_choice("Checklist ... Best response: 3", 5) == 2

    def test_parse_one_pass_bare_number(self):
        assert parse_one_pass_choice("4", 5) == 3

    def test_parse_one_pass_unparseable(self):
        assert parse_one_pass_choice("I like them all", 5) is None

    def test_parse_one_pass_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            parse_one_pass_choice("Best response: 9", 5)
        with pytest.raises(IndexOutOfRange):
            parse_one_pass_choice("Best response: 0", 5)


class TestTemplates:
    def test_pairwise_fills_slots(self, templates):
        rendered, version = templates.render_pairwise("the prompt", "text A", "text B")
        assert "the prompt" in rendered
        assert "text A" in rendered and "text B" in rendered
        assert len(version) == 12

    def test_one_pass_numbers_candidates(self, templates):
        rendered, _ = templates.render_one_pass("p", ["first", "second"], checklist=True)
        assert "[1]\nfirst" in rendered and "[2]\nsecond" in rendered
        assert "checklist" in rendered.lower()

    def test_checklist_flag_switches_template_version(self, templates):
        _, with_checklist = templates.render_one_pass("p", ["a", "b"], checklist=True)
        _, without = templates.render_one_pass("p", ["a", "b"], checklist=False)
        assert with_checklist != without

    def test_override_dir(self, tmp_path):
        (tmp_path / "pairwise.txt").write_text("CUSTOM {prompt} {candidate_a} {candidate_b}")
        templates = TemplateSet(tmp_path)
        rendered, version = templates.render_pairwise("p", "a", "b")
        assert rendered.startswith("CUSTOM")
        assert version != TemplateSet().get("pairwise").version

    def test_cross_lingual_instruction(self):
        assert apply_cross_lingual("Explain.", "zh").startswith("Respond in Chinese.")
        assert apply_cross_lingual("Explain.", None) == "Explain."


class TestReask:
    def test_reask_recovers_on_second_attempt(self, templates):
        judge = ScriptedJudgeBackend(descriptor(retry_limit=2), ["garbled output", "Winner: B"])
        pref = judge_pairwise(judge, "q", "aaa", "bbb", templates)
        assert pref.verdict is Verdict.SECOND_WINS

    def test_reask_exhaustion_raises(self, templates):
        judge = ScriptedJudgeBackend(descriptor(retry_limit=1), ["nope", "still nope"])
        with pytest.raises(UnparseableVerdict):
            judge_pairwise(judge, "q", "aaa", "bbb", templates)

    def test_one_pass_reask(self, templates):
        judge = ScriptedJudgeBackend(descriptor(retry_limit=2), ["thinking...", "2"])
        chosen, _ = judge_one_pass(judge, "q", ["a", "b", "c"], templates)
        assert chosen == 1

    def test_both_orders_agreement_and_conflict(self, templates):
        agree = ScriptedJudgeBackend(descriptor(retry_limit=0), ["Winner: A", "Winner: B"])
        pref = judge_pairwise(agree, "q", "x", "y", templates, both_orders=True)
        assert pref.verdict is Verdict.FIRST_WINS  # A forward, B backward = same winner

        conflict = ScriptedJudgeBackend(descriptor(retry_limit=0), ["Winner: A", "Winner: A"])
        pref = judge_pairwise(conflict, "q", "x", "y", templates, both_orders=True)
        assert pref.verdict is Verdict.TIE  # positions disagree
