"""Stable hashing used for cache keys and deterministic RNG seeding."""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(payload: Any) -> str:
    """Serialize a payload deterministically (sorted keys, compact separators)."""
    return json.dumps(payload, sort_keys=True, ensure_ascii=True, separators=(",", ":"))


def content_key(payload: Any) -> str:
    """Hex digest identifying a request payload, used as the cache key."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def stable_seed(*parts: Any) -> int:
    """64-bit seed derived from the parts; independent of PYTHONHASHSEED."""
    digest = hashlib.sha256(canonical_json(list(parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def record_checksum(key: str, kind: str, request_digest: str, response: Any) -> str:
    """Checksum binding a cache record's identifying fields to its response."""
    body = canonical_json([key, kind, request_digest, response])
    return hashlib.sha256(body.encode("utf-8")).hexdigest()[:16]
