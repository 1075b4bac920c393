"""Dataset ingestion: JSONL prompt files and external baseline outputs."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import DatasetParseError, DuplicateId, PromptValidationError
from ..types import PromptRecord, validate_prompt_record


def load_dataset(path: str | Path) -> list[PromptRecord]:
    """Parse and validate a JSONL prompt file.

    Each line is {id, language, task, prompt, reference?, answer?}.
    Rejects malformed lines, duplicate ids, and records that violate their
    task's invariants.
    """
    records: list[PromptRecord] = []
    seen: set[str] = set()
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record = PromptRecord.from_dict(obj)
            except (ValueError, KeyError) as exc:
                raise DatasetParseError(str(exc), lineno) from exc
            if record.id in seen:
                raise DuplicateId(record.id, lineno)
            seen.add(record.id)
            try:
                validate_prompt_record(record)
            except PromptValidationError as exc:
                raise DatasetParseError(f"record {record.id!r} invalid: {exc}", lineno) from exc
            records.append(record)
    return records


def load_baseline_outputs(path: str | Path) -> dict[str, str]:
    """Load pre-generated baseline texts keyed by prompt id.

    Each line is {id, text}.
    """
    outputs: dict[str, str] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                prompt_id, text = obj["id"], obj["text"]
            except (ValueError, KeyError) as exc:
                raise DatasetParseError(str(exc), lineno) from exc
            if prompt_id in outputs:
                raise DuplicateId(prompt_id, lineno)
            outputs[prompt_id] = text
    return outputs
