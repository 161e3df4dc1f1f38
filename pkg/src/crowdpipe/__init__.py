"""crowdpipe: reproducible crowdsourced data processing.

A pipeline is ordinary Python driving crowd operations (publish tasks,
collect answers, aggregate). Every operation's result is appended to a
durable store keyed by content fingerprint, so a crashed — or simply
rerun — program replays instantly from the store and continues exactly
where it stopped, and a shared store file reproduces the full experiment
on another machine without touching the crowd again.
"""

from __future__ import annotations

from .canonical import canonical_json, fingerprint
from .core import CrowdContext, CrowdData, ResultSet, Row, RunConfig
from .errors import (
    AlreadyAnswered,
    ConfigMismatch,
    CorruptLog,
    CrowdPipeError,
    DuplicateTableOpen,
    DuplicateTaskKey,
    EmptyAssignments,
    FingerprintConflict,
    IncompleteResults,
    InconsistentAnswers,
    InvalidPresenter,
    InvalidThreshold,
    MissingGroundTruth,
    NonEnumeratedLabels,
    PlatformUnreachable,
    PredicateFailure,
    PresenterConflict,
    PresenterLocked,
    ResultTimeout,
    SchemaViolation,
    StoreError,
    StoreLocked,
    TaskComplete,
    UnknownMethod,
    UnknownObject,
    UnknownProject,
    UnknownTask,
    UsageError,
    VersionMismatch,
)
from .lineage import (
    LineageEvent,
    SummaryReport,
    all_events,
    experiment_summary,
    task_history,
    worker_assignments,
)
from .operators import (
    JoinResult,
    PairTask,
    build_pair_truth,
    filtered_join,
    simple_join,
    token_jaccard,
    transitive_join,
)
from .platform import (
    Assignment,
    HttpClient,
    InProcessClient,
    LocalPlatform,
    OfflineClient,
    TaskRecord,
    TaskView,
    WorkerPool,
    WorkerProfile,
    make_profiles,
    simulate_workers,
)
from .presenter import (
    AnswerSchema,
    Presenter,
    image_label_presenter,
    pair_match_presenter,
    presenter_from_dir,
)
from .quality import AggregateLabel, WorkerModel, em_dawid_skene, majority_vote
from .store import CacheRecord, Store, StoreState, cache_get, cache_put, replay

__version__ = "0.1.0"

__all__ = [
    "AggregateLabel",
    "AlreadyAnswered",
    "AnswerSchema",
    "Assignment",
    "CacheRecord",
    "ConfigMismatch",
    "CorruptLog",
    "CrowdContext",
    "CrowdData",
    "CrowdPipeError",
    "DuplicateTableOpen",
    "DuplicateTaskKey",
    "EmptyAssignments",
    "FingerprintConflict",
    "HttpClient",
    "IncompleteResults",
    "InconsistentAnswers",
    "InProcessClient",
    "InvalidPresenter",
    "InvalidThreshold",
    "JoinResult",
    "LineageEvent",
    "LocalPlatform",
    "MissingGroundTruth",
    "NonEnumeratedLabels",
    "OfflineClient",
    "PairTask",
    "PlatformUnreachable",
    "PredicateFailure",
    "Presenter",
    "PresenterConflict",
    "PresenterLocked",
    "ResultSet",
    "ResultTimeout",
    "Row",
    "RunConfig",
    "SchemaViolation",
    "Store",
    "StoreError",
    "StoreLocked",
    "StoreState",
    "SummaryReport",
    "TaskComplete",
    "TaskRecord",
    "TaskView",
    "UnknownMethod",
    "UnknownObject",
    "UnknownProject",
    "UnknownTask",
    "UsageError",
    "VersionMismatch",
    "WorkerModel",
    "WorkerPool",
    "WorkerProfile",
    "all_events",
    "build_pair_truth",
    "cache_get",
    "cache_put",
    "canonical_json",
    "em_dawid_skene",
    "experiment_summary",
    "filtered_join",
    "fingerprint",
    "image_label_presenter",
    "majority_vote",
    "make_profiles",
    "pair_match_presenter",
    "presenter_from_dir",
    "replay",
    "simple_join",
    "simulate_workers",
    "task_history",
    "token_jaccard",
    "transitive_join",
    "worker_assignments",
]
