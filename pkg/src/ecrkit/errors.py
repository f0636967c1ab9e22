"""Exception types shared across the toolkit."""

from __future__ import annotations


class EcrError(Exception):
    """Base class for all toolkit errors."""


class CorpusParseError(EcrError, ValueError):
    """A corpus line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CorpusIntegrityError(EcrError, ValueError):
    """Corpus records reference each other inconsistently."""

    def __init__(self, message: str, offending_ids: list[str] | None = None):
        ids = sorted(offending_ids or [])
        if ids:
            message = f"{message}: {', '.join(ids)}"
        super().__init__(message)
        self.offending_ids = ids


class NotFoundError(EcrError, KeyError):
    """A mention or topic id does not exist in the corpus."""


class TemplateError(EcrError, ValueError):
    """A prompt template was rendered with a missing or undeclared slot."""

    def __init__(self, slot: str):
        super().__init__(f"missing template slot: {slot!r}")
        self.slot = slot


class LlmParseError(EcrError, ValueError):
    """An LLM response did not match the expected answer format."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class TransportError(EcrError, RuntimeError):
    """A completion request failed after exhausting retries."""


class RefusalError(TransportError):
    """The provider refused to answer; carries the raw refusal text."""

    def __init__(self, raw: str):
        super().__init__("provider refused the request")
        self.raw = raw


class ProtocolError(EcrError, RuntimeError):
    """An external scorer response violated the wire protocol."""

    def __init__(self, message: str, payload: object = None):
        super().__init__(message)
        self.payload = payload


class ScoreValidationError(EcrError, ValueError):
    """An external scorer returned a score outside [0, 1]."""


class ConfigError(EcrError, ValueError):
    """A run configuration is invalid or references missing paths."""
