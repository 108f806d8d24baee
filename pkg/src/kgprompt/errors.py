"""Exception types shared across the package."""

from __future__ import annotations


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or inconsistent."""


class GraphLoadError(ValueError):
    """A knowledge-graph input file could not be parsed or validated."""


class PromptTooLongError(ValueError):
    """A prompt exceeds the input token budget even with nothing left to drop."""


class RemoteServiceError(RuntimeError):
    """A remote embedding or completion call failed.

    Carries the HTTP status (None for transport-level failures) and the
    number of attempts made, so callers can decide whether to retry.
    """

    def __init__(self, message: str, *, status: int | None = None, attempts: int = 1):
        super().__init__(message)
        self.status = status
        self.attempts = attempts
