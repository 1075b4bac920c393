"""Judge prompt templates and verdict parsing.

Templates are plain-text assets with {prompt}, {candidates}, {candidate_a},
{candidate_b} slots.  Instructions are always English regardless of the
candidates' language.  Each template's content digest becomes part of the
cache key, so editing a template invalidates cached judgements.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import IndexOutOfRange
from .base import Verdict

PAIRWISE = "pairwise"
ONE_PASS_CHECKLIST = "one_pass_checklist"
ONE_PASS_PLAIN = "one_pass_plain"

REASK_PAIRWISE = "\n\nAnswer with only the winner label: A, B, or Tie."
REASK_ONE_PASS = "\n\nAnswer with only the number of the best response."

# Display names for the cross-lingual generation instruction.
LANGUAGE_NAMES = {
    "en": "English",
    "fr": "French",
    "de": "German",
    "ja": "Japanese",
    "zh": "Chinese",
    "ru": "Russian",
    "es": "Spanish",
    "it": "Italian",
    "pt": "Portuguese",
    "ko": "Korean",
    "ar": "Arabic",
    "hi": "Hindi",
    "nl": "Dutch",
    "tr": "Turkish",
}


def cross_lingual_instruction(language_code: str) -> str:
    """Prefix line that steers the model to answer in another language."""
    name = LANGUAGE_NAMES.get(language_code, language_code)
    return f"Respond in {name}."


def apply_cross_lingual(prompt_text: str, language_code: str | None) -> str:
    if language_code is None:
        return prompt_text
    return f"{cross_lingual_instruction(language_code)}\n\n{prompt_text}"


@dataclass(frozen=True)
class Template:
    name: str
    body: str

    @property
    def version(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()[:12]

    def render(self, **slots: str) -> str:
        return self.body.format(**slots)


class TemplateSet:
    """Loads the packaged defaults, optionally overridden from a directory."""

    def __init__(self, override_dir: str | Path | None = None):
        self._templates: dict[str, Template] = {}
        for name in (PAIRWISE, ONE_PASS_CHECKLIST, ONE_PASS_PLAIN):
            body = resources.files("parascale.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")
            if override_dir is not None:
                candidate = Path(override_dir) / f"{name}.txt"
                if candidate.exists():
                    body = candidate.read_text(encoding="utf-8")
            self._templates[name] = Template(name, body)

    def get(self, name: str) -> Template:
        return self._templates[name]

    def render_pairwise(self, prompt: str, candidate_a: str, candidate_b: str) -> tuple[str, str]:
        t = self.get(PAIRWISE)
        return t.render(prompt=prompt, candidate_a=candidate_a, candidate_b=candidate_b), t.version

    def render_one_pass(self, prompt: str, candidates: list[str], checklist: bool = True) -> tuple[str, str]:
        t = self.get(ONE_PASS_CHECKLIST if checklist else ONE_PASS_PLAIN)
        numbered = "\n\n".join(f"[{i + 1}]\n{text}" for i, text in enumerate(candidates))
        return t.render(prompt=prompt, candidates=numbered), t.version


_WINNER_RE = re.compile(r"winner\s*:\s*<?\s*(a|b|tie)\s*>?", re.IGNORECASE)
_BEST_RE = re.compile(r"best\s+response\s*:\s*<?\s*(\d+)\s*>?", re.IGNORECASE)
_BARE_LABEL_RE = re.compile(r"^\s*<?\s*(a|b|tie)\s*>?\s*\.?\s*$", re.IGNORECASE)
_BARE_NUMBER_RE = re.compile(r"^\s*<?\s*(\d+)\s*>?\s*\.?\s*$")


def parse_preference(raw_text: str) -> Verdict | None:
    """Extract the last "Winner: ..." verdict; None when unparseable."""
    matches = _WINNER_RE.findall(raw_text)
    if not matches:
        bare = _BARE_LABEL_RE.match(raw_text)
        if bare is None:
            return None
        matches = [bare.group(1)]
    label = matches[-1].lower()
    return {"a": Verdict.FIRST_WINS, "b": Verdict.SECOND_WINS, "tie": Verdict.TIE}[label]


def parse_one_pass_choice(raw_text: str, n_candidates: int) -> int | None:
    """Extract the last "Best response: k" as a zero-based index.

    Returns None when no verdict is present; raises IndexOutOfRange when the
    judge names a candidate number outside [1, n_candidates].
    """
    matches = _BEST_RE.findall(raw_text)
    if not matches:
        bare = _BARE_NUMBER_RE.match(raw_text)
        if bare is None:
            return None
        matches = [bare.group(1)]
    k = int(matches[-1])
    if not 1 <= k <= n_candidates:
        raise IndexOutOfRange(f"judge chose candidate {k} of {n_candidates}")
    return k - 1
