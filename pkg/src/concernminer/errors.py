"""Exception types shared across the toolkit."""

from __future__ import annotations


class ConcernMinerError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ConcernMinerError):
    """Bad input data, configuration, or a schema/invariant violation."""


class SchemaMismatchError(ValidationError):
    """Ingestion rejected more than half of the records in a file."""


class BackendError(ConcernMinerError):
    """An inference backend failed after exhausting its retries.

    ``completed``/``total`` report how far a batched stage got before the
    abort; completed work is already persisted in the stage cache, so a
    rerun resumes from there.
    """

    def __init__(self, message: str, *, completed: int | None = None, total: int | None = None):
        super().__init__(message)
        self.completed = completed
        self.total = total
