"""Append-only JSONL response cache keyed by request content.

Each record is one line: {key, kind, request_digest, response, timestamp,
checksum}.  Records are persisted as they are written, so a crashed run can
be resumed without repeating any backend call.  On reload, a torn final
record (an interrupted append) is silently dropped; corruption anywhere
else raises CacheCorrupt.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from pathlib import Path
from typing import Any, Callable

from ..errors import CacheCorrupt
from .keys import record_checksum

logger = logging.getLogger(__name__)


class ResponseCache:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, Any] = {}
        self.hits = 0
        self.misses = 0
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        raw_lines = self.path.read_bytes().split(b"\n")
        # Drop the trailing empty chunk from a final newline, if any.
        if raw_lines and raw_lines[-1] == b"":
            raw_lines.pop()
        for i, raw in enumerate(raw_lines):
            final = i == len(raw_lines) - 1
            try:
                record = json.loads(raw)
                expected = record_checksum(
                    record["key"], record["kind"], record["request_digest"], record["response"]
                )
                if record["checksum"] != expected:
                    raise ValueError("checksum mismatch")
            except (ValueError, KeyError, TypeError) as exc:
                if final:
                    logger.warning("dropping torn final cache record in %s", self.path)
                    break
                raise CacheCorrupt(f"{self.path}: record {i + 1} is corrupt: {exc}") from exc
            self._entries[record["key"]] = record["response"]
        logger.debug("loaded %d cache records from %s", len(self._entries), self.path)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def lookup_or_call(self, key: str, kind: str, request_digest: str, thunk: Callable[[], Any]) -> tuple[Any, bool]:
        """Return (response, was_hit); on a miss, call the thunk and persist.

        The thunk runs outside the lock so slow backend calls do not block
        other cache users; concurrent misses on the same key may both call
        the backend, with the last write winning (both responses are valid).
        """
        with self._lock:
            if key in self._entries:
                self.hits += 1
                return self._entries[key], True
        response = thunk()
        with self._lock:
            self.misses += 1
            self._entries[key] = response
            self._append(key, kind, request_digest, response)
        return response, False

    def _append(self, key: str, kind: str, request_digest: str, response: Any) -> None:
        record = {
            "key": key,
            "kind": kind,
            "request_digest": request_digest,
            "response": response,
            "timestamp": time.time(),
            "checksum": record_checksum(key, kind, request_digest, response),
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=True) + "\n")
