"""CrowdContext and CrowdData: an experiment as table manipulations.

A CrowdData table has base columns ``id`` and ``object``; publishing adds a
``task`` column, result collection adds ``result``, and quality control adds
derived columns (``mv``, ``em``). Task and result cells are persisted in the
context's store keyed by content fingerprint, never by call order, so a
rerun of the same script — or an extended script, or a reordered one —
reuses every cached cell and only touches the platform for genuinely new
work.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .canonical import fingerprint, is_identifier
from .errors import (
    ConfigMismatch,
    DuplicateTableOpen,
    IncompleteResults,
    InvalidPresenter,
    NonEnumeratedLabels,
    PredicateFailure,
    PresenterLocked,
    ResultTimeout,
    UnknownMethod,
    UsageError,
)
from .platform.client import InProcessClient, PlatformClient
from .platform.local import LocalPlatform
from .platform.simulate import WorkerPool
from .platform.types import Assignment, TaskRecord, WorkerProfile
from .presenter import Presenter
from .quality import AggregateLabel, em_dawid_skene, majority_vote
from .store import KIND_ASSIGNMENT, KIND_META, KIND_TASK, Store

logger = logging.getLogger(__name__)

DB_ENV_VAR = "CROWDPIPE_DB"


@dataclass(frozen=True)
class RunConfig:
    """Knobs of a run: redundancy, polling, and the experiment seed."""

    n_assignments: int = 3
    poll_interval: float = 0.5
    result_timeout: float = 60.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_assignments < 1:
            raise ValueError("n_assignments must be >= 1")
        if self.poll_interval <= 0:
            raise ValueError("poll_interval must be positive")
        if self.result_timeout <= 0:
            raise ValueError("result_timeout must be positive")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in 64 unsigned bits")


@dataclass
class ResultSet:
    """All assignments collected for one row's task."""

    assignments: list[Assignment] = field(default_factory=list)

    def labels(self) -> list:
        return [a.answer for a in self.assignments]

    def worker_labels(self) -> list[tuple[str, Any]]:
        return [(a.worker_id, a.answer) for a in self.assignments]

    def __len__(self) -> int:
        return len(self.assignments)


@dataclass
class Row:
    id: int
    object: Any
    fingerprint: str
    task: TaskRecord | None = None
    result: ResultSet | None = None


def default_db_path(project_name: str) -> Path:
    env = os.environ.get(DB_ENV_VAR)
    if env:
        return Path(env)
    return Path(f"./{project_name}.cpdb")


class CrowdContext:
    """Entry point: binds a project name, store, platform client, and config.

    Exactly one live context may hold a given store file; the store's
    exclusive lock enforces it. Use as a context manager or call close().
    """

    def __init__(
        self,
        project_name: str,
        db_path: str | Path | None = None,
        platform: PlatformClient | LocalPlatform | None = None,
        config: RunConfig | None = None,
    ):
        if not is_identifier(project_name):
            raise UsageError(
                f"project name must match [A-Za-z0-9_-]+, got {project_name!r}"
            )
        self.project_name = project_name
        self.config = config or RunConfig()
        self.db_path = Path(db_path) if db_path else default_db_path(project_name)
        self.store = Store(self.db_path, project=project_name)
        self._open_tables: set[str] = set()
        self._client: PlatformClient | None = None
        self._owns_platform = False
        if isinstance(platform, LocalPlatform):
            self._client = InProcessClient(platform)
        elif platform is not None:
            self._client = platform

    # -- platform wiring -----------------------------------------------------

    @property
    def platform_client(self) -> PlatformClient:
        """The client, creating the default embedded platform on first use.

        Lazy on purpose: a fully cached rerun never touches the platform, so
        it must work with no platform reachable (or even instantiated).
        """
        if self._client is None:
            path = self.db_path.parent / f"{self.project_name}.platform.cpdb"
            self._client = InProcessClient(LocalPlatform(path))
            self._owns_platform = True
        return self._client

    @property
    def embedded_platform(self) -> LocalPlatform:
        client = self.platform_client
        if not isinstance(client, InProcessClient):
            raise UsageError("context is not using an embedded platform")
        return client.platform

    def attach_simulator(
        self,
        profiles: list[WorkerProfile],
        ground_truth: dict[str, str],
        mode: str = "deterministic",
    ) -> WorkerPool:
        """Attach seeded workers to the embedded platform; they answer all
        pending tasks whenever results are fetched."""
        pool = WorkerPool(profiles, ground_truth, mode=mode)
        self.embedded_platform.attach_simulator(pool)
        return pool

    # -- tables ----------------------------------------------------------------

    def crowd_data(self, objects: Sequence[Any], table_name: str) -> "CrowdData":
        """Create a table from input objects, ids 1..n in input order.

        Persisted task/result cells whose object fingerprints match are
        re-attached, so building the same table over an existing store picks
        up exactly where the last run left off.
        """
        if not is_identifier(table_name):
            raise UsageError(
                f"table name must match [A-Za-z0-9_-]+, got {table_name!r}"
            )
        if table_name in self._open_tables:
            raise DuplicateTableOpen(
                f"table {table_name!r} is already open in this context"
            )
        cd = CrowdData(self, table_name)
        cd.extend(objects)
        self._open_tables.add(table_name)
        return cd

    def _release_table(self, table_name: str) -> None:
        self._open_tables.discard(table_name)

    def close(self) -> None:
        self.store.close()
        if self._client is not None and self._owns_platform:
            self._client.close()
        self._open_tables.clear()

    def __enter__(self) -> "CrowdContext":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class CrowdData:
    """Ordered table of rows; every manipulation returns self for chaining."""

    def __init__(self, ctx: CrowdContext, table_name: str):
        self.ctx = ctx
        self.table_name = table_name
        self.rows: list[Row] = []
        self.presenter: Presenter | None = None
        self.derived_columns: dict[str, dict[int, AggregateLabel]] = {}
        self.worker_models: dict | None = None
        self._next_id = 1
        self._platform_project_id: str | None = None

    # -- basics ----------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def _meta_key(self) -> str:
        return fingerprint({"table": self.table_name})

    @property
    def platform_project_name(self) -> str:
        return f"{self.ctx.project_name}.{self.table_name}"

    def append(self, obj: Any) -> "CrowdData":
        """Add one row with id = max existing id + 1 (ids are never reused)."""
        row = Row(id=self._next_id, object=obj, fingerprint=fingerprint(obj))
        self._next_id += 1
        self._reattach(row)
        self.rows.append(row)
        return self

    def extend(self, objects: Iterable[Any]) -> "CrowdData":
        for obj in objects:
            self.append(obj)
        return self

    def filter(self, predicate: Callable[[Row], bool]) -> "CrowdData":
        """Keep rows passing the predicate. In-memory only: persisted cache
        records survive, so a later run without the filter recovers them."""
        kept = []
        for i, row in enumerate(self.rows):
            try:
                verdict = predicate(row)
            except Exception as exc:
                raise PredicateFailure(
                    f"predicate raised on row index {i} (id {row.id}): {exc}",
                    row_index=i,
                    row_id=row.id,
                ) from exc
            if verdict:
                kept.append(row)
        self.rows = kept
        return self

    def clear(self) -> "CrowdData":
        """Drop all rows; store and platform are untouched. Also releases the
        table name, so the table can be rebuilt from the store."""
        self.rows = []
        self.derived_columns = {}
        self.ctx._release_table(self.table_name)
        return self

    def _reattach(self, row: Row) -> None:
        """Pull persisted task/result cells for this fingerprint, if any."""
        cached = self.ctx.store.get(KIND_TASK, row.fingerprint)
        if cached is None:
            return
        row.task = TaskRecord.from_dict(cached.payload)
        stored = self.ctx.store.get(KIND_ASSIGNMENT, row.fingerprint)
        if stored:
            row.result = ResultSet(
                [
                    Assignment.from_dict(rec.payload)
                    for rec in stored
                    if rec.payload.get("task_id") == row.task.task_id
                ]
            )

    # -- presenter ---------------------------------------------------------------

    def set_presenter(self, presenter: Presenter) -> "CrowdData":
        """Record the worker-facing presenter; rows are unchanged.

        Once tasks have been published under a presenter version, setting a
        different one is refused: the collected answers are only
        interpretable under the presenter that elicited them.
        """
        published_hashes = set()
        for rec in self.ctx.store.state.records:
            if rec.kind != KIND_TASK or rec.table != self.table_name:
                continue
            payload = rec.payload.get("payload", {})
            published_hashes.add(payload.get("presenter_version"))
        for row in self.rows:
            if row.task is not None:
                published_hashes.add(row.task.payload.get("presenter_version"))
        published_hashes.discard(None)
        if published_hashes and published_hashes != {presenter.version_hash}:
            raise PresenterLocked(
                f"tasks for table {self.table_name!r} were published under a "
                "different presenter version"
            )
        self.ctx.store.put(
            KIND_META,
            key=self._meta_key,
            payload={
                "table": self.table_name,
                "presenter_name": presenter.name,
                "version_hash": presenter.version_hash,
                "schema": presenter.schema.to_dict(),
            },
            table=self.table_name,
        )
        self.presenter = presenter
        return self

    # -- publish -------------------------------------------------------------------

    def publish_task(self) -> "CrowdData":
        """Fill the task column, publishing only cache misses.

        Each cached TaskRecord is durably appended before this returns; on a
        rerun every row is a cache hit and the platform is never contacted.
        """
        if not self.rows:
            return self
        if self.presenter is None:
            raise UsageError(
                f"table {self.table_name!r} has no presenter; call set_presenter first"
            )
        n = self.ctx.config.n_assignments
        for row in self.rows:
            cached = self.ctx.store.get(KIND_TASK, row.fingerprint)
            if cached is not None:
                task = TaskRecord.from_dict(cached.payload)
                if task.n_assignments != n:
                    raise ConfigMismatch(
                        f"object {row.fingerprint[:12]}… was published with "
                        f"n_assignments={task.n_assignments}, run wants {n}"
                    )
                row.task = task
                continue
            task = self._publish_row(row, n)
            self.ctx.store.put(
                KIND_TASK,
                key=row.fingerprint,
                payload=task.to_dict(),
                table=self.table_name,
                sync=True,
            )
            row.task = task
        return self

    def _publish_row(self, row: Row, n: int) -> TaskRecord:
        client = self.ctx.platform_client
        if self._platform_project_id is None:
            self._platform_project_id = client.create_project(
                self.platform_project_name, self.presenter
            )
        payload = {
            "object": row.object,
            "presenter_version": self.presenter.version_hash,
        }
        return client.publish(self._platform_project_id, payload, n, row.fingerprint)

    # -- results ---------------------------------------------------------------------

    def _stored_assignments(self, row: Row) -> list[Assignment]:
        if row.task is None:
            return []
        return [
            Assignment.from_dict(rec.payload)
            for rec in self.ctx.store.get(KIND_ASSIGNMENT, row.fingerprint)
            if rec.payload.get("task_id") == row.task.task_id
        ]

    def _incomplete_rows(self) -> list[Row]:
        out = []
        seen: set[str] = set()
        for row in self.rows:
            # task ids are only unique per platform instance; the object
            # fingerprint is the durable identity of a row's work
            if row.task is None or row.fingerprint in seen:
                continue
            seen.add(row.fingerprint)
            if len(self._stored_assignments(row)) < row.task.n_assignments:
                out.append(row)
        return out

    def get_result(self, blocking: bool = True) -> "CrowdData":
        """Fill the result column from the store, polling the platform for
        anything not yet cached.

        Newly seen assignments are durably appended before being exposed.
        Blocking mode polls every ``poll_interval`` until every task has its
        ``n_assignments`` answers or ``result_timeout`` elapses.
        """
        if self.rows and all(row.task is None for row in self.rows):
            raise UsageError(
                f"table {self.table_name!r} has no task column; publish first"
            )
        deadline = time.monotonic() + self.ctx.config.result_timeout
        while True:
            incomplete = self._incomplete_rows()
            if not incomplete:
                break
            self._poll_once(incomplete)
            if not blocking:
                break
            if not self._incomplete_rows():
                break
            if time.monotonic() >= deadline:
                self._materialize()
                raise ResultTimeout(
                    f"{len(self._incomplete_rows())} tasks still incomplete after "
                    f"{self.ctx.config.result_timeout}s (partial results are stored)"
                )
            time.sleep(self.ctx.config.poll_interval)
        self._materialize()
        return self

    def _poll_once(self, incomplete: list[Row]) -> None:
        client = self.ctx.platform_client
        wrote = False
        for row in incomplete:
            for assignment in client.fetch_results(row.task.task_id):
                existing = self.ctx.store.state.find_assignment(
                    row.fingerprint, assignment.task_id, assignment.worker_id
                )
                if existing is None:
                    self.ctx.store.put(
                        KIND_ASSIGNMENT,
                        key=row.fingerprint,
                        payload=assignment.to_dict(),
                        table=self.table_name,
                        sync=False,
                    )
                    wrote = True
        if wrote:
            self.ctx.store.sync()

    def _materialize(self) -> None:
        for row in self.rows:
            if row.task is not None:
                row.result = ResultSet(self._stored_assignments(row))

    # -- quality control ---------------------------------------------------------------

    def quality_control(self, method: str = "mv") -> "CrowdData":
        """Aggregate answers into a derived column named after the method.

        Derived columns are recomputed, never persisted: they are pure
        functions of the persisted task/result columns.
        """
        if method not in ("mv", "em"):
            raise UnknownMethod(f"unknown quality-control method {method!r}")
        for row in self.rows:
            if row.result is None or len(row.result) == 0:
                raise IncompleteResults(
                    f"row {row.id} has no assignments; collect results first"
                )
        if method == "mv":
            votes = {row.id: row.result.labels() for row in self.rows}
            self.derived_columns["mv"] = majority_vote(votes)
        else:
            if self.presenter is not None and not self.presenter.schema.enumerated:
                raise NonEnumeratedLabels(
                    "em needs an enumerated label space, not free text"
                )
            answers = {row.id: row.result.worker_labels() for row in self.rows}
            labels = None
            if self.presenter is not None and self.presenter.schema.enumerated:
                labels = list(self.presenter.schema.labels)
            aggregates, models = em_dawid_skene(answers, label_space=labels)
            self.derived_columns["em"] = aggregates
            self.worker_models = models
        return self

    # -- introspection -------------------------------------------------------------------

    def column_names(self) -> list[str]:
        cols = ["id", "object"]
        if any(r.task is not None for r in self.rows):
            cols.append("task")
        if any(r.result is not None for r in self.rows):
            cols.append("result")
        cols.extend(self.derived_columns.keys())
        return cols

    def snapshot(self) -> dict:
        """Deterministic structural view: ids, objects, task ids, assignment
        multisets, and derived cells. Used for replay-equality checks."""
        rows = []
        for row in self.rows:
            derived = {}
            for col, values in self.derived_columns.items():
                agg = values.get(row.id)
                if agg is not None:
                    derived[col] = {
                        "label": agg.label,
                        "support": agg.support,
                        "total": agg.total,
                        "tie": agg.tie,
                    }
            rows.append(
                {
                    "id": row.id,
                    "object": row.object,
                    "fingerprint": row.fingerprint,
                    "task_id": row.task.task_id if row.task else None,
                    "assignments": sorted(
                        [a.worker_id, a.answer] for a in (row.result.assignments if row.result else [])
                    ),
                    "derived": derived,
                }
            )
        return {"table": self.table_name, "rows": rows}

    def to_text_table(self) -> str:
        """Fixed-width rendering; deterministic for identical store contents."""
        cols = self.column_names()
        header = list(cols)
        body: list[list[str]] = []
        for row in self.rows:
            cells = [str(row.id), _render_object(row.object)]
            if "task" in cols:
                cells.append(row.task.task_id if row.task else "-")
            if "result" in cols:
                cells.append(
                    "|".join(str(a.answer) for a in row.result.assignments)
                    if row.result
                    else "-"
                )
            for col in self.derived_columns:
                agg = self.derived_columns[col].get(row.id)
                if agg is None:
                    cells.append("-")
                else:
                    cells.append(f"{agg.label}*" if agg.tie else str(agg.label))
            body.append(cells)
        widths = [
            max(len(header[i]), *(len(r[i]) for r in body)) if body else len(header[i])
            for i in range(len(header))
        ]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
            "  ".join("-" * w for w in widths).rstrip(),
        ]
        for cells in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip())
        return "\n".join(lines)


def _render_object(obj: Any) -> str:
    if isinstance(obj, str):
        return obj
    from .canonical import canonical_json

    return canonical_json(obj)
