"""Exception hierarchy shared across the engine.

Every error raised on purpose by this package derives from RaqeError so
callers (CLI, HTTP service) can distinguish user-facing failures from bugs.
"""


class RaqeError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class DecodeError(RaqeError):
    """Raw document bytes are not valid UTF-8."""

    code = "decode_error"


class EmptyDocumentError(RaqeError):
    """A parsed document contains no text."""

    code = "empty_document"


class EmptyTextError(RaqeError):
    """An empty string was passed where embeddable text is required."""

    code = "empty_text"


class EmptyQueryError(RaqeError):
    """The user query is empty."""

    code = "empty_query"


class ProviderError(RaqeError):
    """The remote embedding provider returned an unusable response."""

    code = "provider_error"

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class LlmError(RaqeError):
    """The chat-completions call failed or returned a malformed payload."""

    code = "llm_error"


class NotIndexedError(RaqeError):
    """A chunk reference does not exist in the index."""

    code = "not_indexed"


class DuplicateChunkError(RaqeError):
    """Two chunks share the same (doc_id, chunk_id)."""

    code = "duplicate_chunk"


class MalformedRankingError(RaqeError):
    """A ranking list passed to fusion contains duplicate entries."""

    code = "malformed_ranking"


class PersistenceError(RaqeError):
    """An index file is missing or cannot be decoded."""

    code = "persistence_error"


class JudgeParseError(RaqeError):
    """No numeric score could be extracted from a judge response."""

    code = "judge_parse_error"


class CorrelationUndefinedError(RaqeError):
    """Pearson correlation is undefined for the given inputs."""

    code = "correlation_undefined"


class ConfigError(RaqeError):
    """A configuration file or override violates the config schema."""

    code = "config_error"


class EvalAbortedError(RaqeError):
    """An evaluation run exceeded the tolerated failure rate."""

    code = "eval_aborted"


class ChatStageError(RaqeError):
    """A chat pipeline stage failed; wraps the original error with the stage name."""

    code = "chat_stage_error"

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
