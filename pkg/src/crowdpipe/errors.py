"""Exception hierarchy for crowdpipe.

Every error that can cross the HTTP wire carries a stable ``code`` string so
the platform service can serialize it as ``{"error": code, "detail": text}``.
"""

from __future__ import annotations


class CrowdPipeError(Exception):
    """Base class for all crowdpipe errors."""

    code = "error"
    http_status = 500


class UsageError(CrowdPipeError):
    """An operation was called in a state its contract forbids."""

    code = "usage_error"
    http_status = 400


# --- store ---------------------------------------------------------------

class StoreError(CrowdPipeError):
    code = "store_error"


class StoreLocked(StoreError):
    """Another live context holds the exclusive lock on the store file."""

    code = "store_locked"


class CorruptLog(StoreError):
    """A non-final record in the store failed validation."""

    code = "corrupt_log"


class VersionMismatch(StoreError):
    """The store file declares an unsupported format version."""

    code = "version_mismatch"


class DuplicateTaskKey(StoreError):
    """A task record was appended twice with conflicting payloads."""

    code = "duplicate_task_key"


# --- core ----------------------------------------------------------------

class DuplicateTableOpen(CrowdPipeError):
    code = "duplicate_table_open"


class InvalidPresenter(CrowdPipeError):
    code = "invalid_presenter"
    http_status = 400


class PresenterLocked(CrowdPipeError):
    """Tasks were already published under a different presenter version."""

    code = "presenter_locked"
    http_status = 409


class ConfigMismatch(CrowdPipeError):
    """A cached task was published with a different n_assignments."""

    code = "config_mismatch"


class PredicateFailure(CrowdPipeError):
    """A filter predicate raised; carries the failing row position."""

    code = "predicate_failure"

    def __init__(self, message: str, row_index: int, row_id: int | None = None):
        super().__init__(message)
        self.row_index = row_index
        self.row_id = row_id


class ResultTimeout(CrowdPipeError):
    """Blocking get_result gave up before all answers arrived."""

    code = "result_timeout"


# --- quality -------------------------------------------------------------

class UnknownMethod(CrowdPipeError):
    code = "unknown_method"


class IncompleteResults(CrowdPipeError):
    """Aggregation requires at least one assignment per row."""

    code = "incomplete_results"


class EmptyAssignments(CrowdPipeError):
    code = "empty_assignments"


class NonEnumeratedLabels(CrowdPipeError):
    """EM needs an enumerated label space, not free text."""

    code = "non_enumerated_labels"


# --- operators -----------------------------------------------------------

class InvalidThreshold(CrowdPipeError):
    code = "invalid_threshold"


class InconsistentAnswers(CrowdPipeError):
    """Crowd verdicts violate transitive closure (diagnostic, not fatal)."""

    code = "inconsistent_answers"


# --- lineage -------------------------------------------------------------

class UnknownObject(CrowdPipeError):
    code = "unknown_object"


# --- platform ------------------------------------------------------------

class PlatformError(CrowdPipeError):
    code = "platform_error"


class PlatformUnreachable(PlatformError):
    """The platform could not be reached; the call is retryable."""

    code = "platform_unreachable"
    http_status = 503


class PresenterConflict(PlatformError):
    code = "presenter_conflict"
    http_status = 409


class FingerprintConflict(PlatformError):
    code = "fingerprint_conflict"
    http_status = 409


class UnknownProject(PlatformError):
    code = "unknown_project"
    http_status = 404


class UnknownTask(PlatformError):
    code = "unknown_task"
    http_status = 404


class AlreadyAnswered(PlatformError):
    code = "already_answered"
    http_status = 409


class TaskComplete(PlatformError):
    code = "task_complete"
    http_status = 409


class SchemaViolation(PlatformError):
    code = "schema_violation"
    http_status = 400


class MissingGroundTruth(PlatformError):
    code = "missing_ground_truth"


WIRE_ERRORS = {
    cls.code: cls
    for cls in (
        PresenterConflict,
        FingerprintConflict,
        UnknownProject,
        UnknownTask,
        AlreadyAnswered,
        TaskComplete,
        SchemaViolation,
        UsageError,
    )
}


def error_from_wire(code: str, detail: str) -> CrowdPipeError:
    """Rebuild a typed exception from a platform error response."""
    cls = WIRE_ERRORS.get(code, PlatformError)
    return cls(detail)
