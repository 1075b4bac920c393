"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ParascaleError(Exception):
    """Base class for all package-specific errors."""


# --- prompt record validation ---------------------------------------------


class PromptValidationError(ParascaleError):
    pass


class EmptyPrompt(PromptValidationError):
    pass


class MissingAnswer(PromptValidationError):
    pass


class MissingReference(PromptValidationError):
    pass


# --- backends ---------------------------------------------------------------


class BackendError(ParascaleError):
    pass


class BackendTimeout(BackendError):
    pass


class AuthMissing(BackendError):
    pass


class MalformedResponse(BackendError):
    pass


class UnparseableVerdict(BackendError):
    pass


class IndexOutOfRange(BackendError):
    """The judge named a candidate number that does not exist."""


class NonFiniteLogits(BackendError):
    pass


class CacheCorrupt(ParascaleError):
    """A non-final cache record failed its checksum or did not parse."""


# --- sampling ---------------------------------------------------------------


class InvalidConfig(ParascaleError):
    pass


class PartialPool(ParascaleError):
    """Some pool slots failed after retries; carries the failed slot indices."""

    def __init__(self, message: str, failed_slots: list[int] | None = None):
        super().__init__(message)
        self.failed_slots = failed_slots or []


# --- selection --------------------------------------------------------------


class MissingLogprobs(ParascaleError):
    pass


class ContextOverflow(ParascaleError):
    pass


class EmptyMatrix(ParascaleError):
    pass


class EmptyEvidence(ParascaleError):
    pass


# --- metrics ----------------------------------------------------------------


class ZeroGreedyScore(ParascaleError):
    """Greedy score is 0 so relative pool gains are undefined for this prompt."""


class EmptyRecords(ParascaleError):
    pass


# --- harness ----------------------------------------------------------------


class ConfigError(ParascaleError):
    pass


class DatasetError(ParascaleError):
    pass


class DatasetParseError(DatasetError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateId(DatasetError):
    def __init__(self, record_id: str, line: int):
        super().__init__(f"duplicate id {record_id!r} on line {line}")
        self.record_id = record_id
        self.line = line
