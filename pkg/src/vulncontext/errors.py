"""Exception hierarchy shared across the package."""

from __future__ import annotations


class VulnContextError(Exception):
    """Base class for all package errors."""


class UnsupportedLanguageError(VulnContextError):
    """No frontend is registered for the requested language."""


class SourceSyntaxError(VulnContextError):
    """The grammar rejected the input source text."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class MissingPlaceholderError(VulnContextError):
    """A verbalization template field has no source value and no omission rule."""


class CorpusFormatError(VulnContextError):
    """The knowledge corpus export could not be parsed."""


class EncoderUnavailableError(VulnContextError):
    """The configured text encoder cannot be reached and no cached vectors exist."""


class EncoderMismatchError(VulnContextError):
    """A loaded index was produced by a different encoder than the one configured."""


class EmptyCorpusError(VulnContextError):
    """Retrieval was attempted against an index with no entries."""


class QueryParseError(VulnContextError):
    """No retrieval query lines could be parsed from a model response."""


class LlmError(VulnContextError):
    """Base class for chat-completion failures."""


class LlmTimeoutError(LlmError):
    """The request exceeded its timeout."""


class LlmTransportError(LlmError):
    """The request failed at the transport layer."""


class LlmRateLimitedError(LlmError):
    """The backend rejected the request due to rate limiting."""


class LlmBadResponseError(LlmError):
    """The backend returned a malformed or empty response."""


class VerdictParseError(VulnContextError):
    """No verdict line could be parsed from the judgment response."""


class TriageError(VulnContextError):
    """The final judgment call failed after retries; no verdict is available."""


class MissingPredictionError(VulnContextError):
    """A pair references a function with no recorded prediction."""


class DatasetFormatError(VulnContextError):
    """A dataset, manifest, or verdict file is malformed."""


class ConfigError(VulnContextError):
    """Invalid run configuration."""
