"""Embedded crowdsourcing platform.

Holds projects, tasks, and assignments; enforces server-side idempotency on
task fingerprints (the dedup point that covers a client crashing after a
publish was acknowledged but before it was cached). State is persisted in
its own ``.cpdb`` log so the platform honors the same recovery contract as
the pipeline: restart, replay, carry on.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..canonical import fingerprint, utc_now_rfc3339
from ..errors import (
    AlreadyAnswered,
    FingerprintConflict,
    PresenterConflict,
    TaskComplete,
    UnknownProject,
    UnknownTask,
)
from ..presenter import Presenter
from ..store import KIND_ASSIGNMENT, KIND_META, KIND_TASK, Store, replay
from .types import Assignment, TaskRecord, TaskView

logger = logging.getLogger(__name__)


@dataclass
class _Project:
    project_id: str
    name: str
    presenter: Presenter
    task_ids: list[str] = field(default_factory=list)


class LocalPlatform:
    """In-process platform service; all operations are linearized."""

    def __init__(self, state_path: str | Path | None = None):
        self._lock = threading.RLock()
        self._projects: dict[str, _Project] = {}
        self._projects_by_name: dict[str, _Project] = {}
        self._tasks: dict[str, TaskRecord] = {}
        self._tasks_by_fp: dict[tuple[str, str], TaskRecord] = {}
        self._assignments: dict[str, list[Assignment]] = {}
        self._answered: set[tuple[str, str]] = set()
        self._next_project = 1
        self._next_task = 1
        self._auto_pool = None
        self._draining = False
        self._log: Store | None = None
        if state_path is not None:
            self._recover(Path(state_path))
            self._log = Store(state_path, project="_platform")

    # -- recovery ----------------------------------------------------------

    def _recover(self, path: Path) -> None:
        if not path.exists():
            return
        state = replay(path)
        for rec in state.records:
            if rec.kind == KIND_META:
                p = rec.payload
                project = _Project(
                    project_id=p["project_id"],
                    name=p["name"],
                    presenter=Presenter.from_dict(p["presenter"]),
                )
                self._projects[project.project_id] = project
                self._projects_by_name[project.name] = project
                self._next_project = max(
                    self._next_project, int(project.project_id.split("-")[1]) + 1
                )
            elif rec.kind == KIND_TASK:
                task = TaskRecord.from_dict(rec.payload)
                self._tasks[task.task_id] = task
                self._tasks_by_fp[(task.project_id, task.fingerprint)] = task
                self._projects[task.project_id].task_ids.append(task.task_id)
                self._next_task = max(
                    self._next_task, int(task.task_id.split("-")[1]) + 1
                )
            elif rec.kind == KIND_ASSIGNMENT:
                a = Assignment.from_dict(rec.payload)
                self._assignments.setdefault(a.task_id, []).append(a)
                self._answered.add((a.task_id, a.worker_id))

    # -- service operations --------------------------------------------------

    def create_project(self, name: str, presenter: Presenter) -> str:
        with self._lock:
            existing = self._projects_by_name.get(name)
            if existing is not None:
                if existing.presenter.version_hash != presenter.version_hash:
                    raise PresenterConflict(
                        f"project {name!r} already exists with a different presenter"
                    )
                return existing.project_id
            project = _Project(
                project_id=f"prj-{self._next_project}", name=name, presenter=presenter
            )
            self._next_project += 1
            if self._log is not None:
                self._log.put(
                    KIND_META,
                    key=fingerprint(name),
                    payload={
                        "project_id": project.project_id,
                        "name": name,
                        "presenter": presenter.to_dict(),
                    },
                    table=name,
                )
            self._projects[project.project_id] = project
            self._projects_by_name[name] = project
            return project.project_id

    def publish(
        self, project_id: str, payload: dict, n_assignments: int, fp: str
    ) -> TaskRecord:
        with self._lock:
            project = self._require_project(project_id)
            project_id = project.project_id  # canonical id, even if named
            existing = self._tasks_by_fp.get((project_id, fp))
            if existing is not None:
                if existing.payload != payload or existing.n_assignments != n_assignments:
                    raise FingerprintConflict(
                        f"fingerprint {fp} already published with a different task"
                    )
                return existing
            task = TaskRecord(
                task_id=f"tsk-{self._next_task:06d}",
                project_id=project_id,
                fingerprint=fp,
                payload=payload,
                n_assignments=n_assignments,
                published_at=utc_now_rfc3339(),
            )
            self._next_task += 1
            if self._log is not None:
                self._log.put(KIND_TASK, key=fp, payload=task.to_dict(), table=project.name)
            self._tasks[task.task_id] = task
            self._tasks_by_fp[(project_id, fp)] = task
            project.task_ids.append(task.task_id)
            return task

    def fetch_results(self, task_id: str) -> list[Assignment]:
        self._maybe_drain()
        with self._lock:
            if task_id not in self._tasks:
                raise UnknownTask(f"no task {task_id}")
            return list(self._assignments.get(task_id, ()))

    def next_task(self, project_id: str, worker_id: str) -> TaskView | None:
        with self._lock:
            project = self._require_project(project_id)
            best = None
            best_order = None
            for tid in project.task_ids:
                task = self._tasks[tid]
                count = len(self._assignments.get(tid, ()))
                if count >= task.n_assignments:
                    continue
                if (tid, worker_id) in self._answered:
                    continue
                order = (count, tid)
                if best_order is None or order < best_order:
                    best, best_order = task, order
            if best is None:
                return None
            return TaskView(
                task_id=best.task_id,
                project_id=best.project_id,
                fingerprint=best.fingerprint,
                payload=best.payload,
                n_assignments=best.n_assignments,
                template=project.presenter.template,
                schema=project.presenter.schema.to_dict(),
            )

    def submit_answer(self, task_id: str, worker_id: str, answer) -> Assignment:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise UnknownTask(f"no task {task_id}")
            if (task_id, worker_id) in self._answered:
                raise AlreadyAnswered(
                    f"worker {worker_id} already answered task {task_id}"
                )
            current = self._assignments.get(task_id, ())
            if len(current) >= task.n_assignments:
                raise TaskComplete(f"task {task_id} already has all answers")
            project = self._projects[task.project_id]
            project.presenter.schema.validate_answer(answer)
            assignment = Assignment(
                task_id=task_id,
                worker_id=worker_id,
                answer=answer,
                submitted_at=utc_now_rfc3339(),
            )
            if self._log is not None:
                self._log.put(
                    KIND_ASSIGNMENT,
                    key=task.fingerprint,
                    payload=assignment.to_dict(),
                    table=project.name,
                )
            self._assignments.setdefault(task_id, []).append(assignment)
            self._answered.add((task_id, worker_id))
            return assignment

    # -- introspection (in-process callers and tests) ------------------------

    def list_projects(self) -> list[dict]:
        with self._lock:
            return [
                {
                    "project_id": p.project_id,
                    "name": p.name,
                    "version_hash": p.presenter.version_hash,
                    "tasks": len(p.task_ids),
                }
                for p in sorted(self._projects.values(), key=lambda p: p.project_id)
            ]

    def project_id_of(self, name: str) -> str | None:
        with self._lock:
            p = self._projects_by_name.get(name)
            return p.project_id if p else None

    def task_count(self, project_id: str | None = None) -> int:
        with self._lock:
            if project_id is None:
                return len(self._tasks)
            return len(self._require_project(project_id).task_ids)

    def task_ids(self, project_id: str | None = None) -> list[str]:
        with self._lock:
            if project_id is None:
                return sorted(self._tasks)
            return list(self._require_project(project_id).task_ids)

    def fetch_task(self, task_id: str) -> TaskRecord:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise UnknownTask(f"no task {task_id}")
            return task

    def pending_tasks(self, project_id: str | None = None) -> list[TaskRecord]:
        with self._lock:
            out = []
            for tid in self.task_ids(project_id):
                task = self._tasks[tid]
                if len(self._assignments.get(tid, ())) < task.n_assignments:
                    out.append(task)
            return out

    def presenter_of(self, project_id: str) -> Presenter:
        with self._lock:
            return self._require_project(project_id).presenter

    def _require_project(self, project_id: str) -> _Project:
        # accept the opaque id or the human-readable name (ids win on clash);
        # lets a worker UI address a project by name without a lookup endpoint
        project = self._projects.get(project_id) or self._projects_by_name.get(
            project_id
        )
        if project is None:
            raise UnknownProject(f"no project {project_id}")
        return project

    # -- simulation hook -----------------------------------------------------

    def attach_simulator(self, pool) -> None:
        """Have simulated workers answer all pending tasks before any
        fetch_results returns; gives blocking result polls something to find."""
        self._auto_pool = pool

    def _maybe_drain(self) -> None:
        if self._auto_pool is None:
            return
        with self._lock:
            if self._draining:
                return
            self._draining = True
            try:
                self._auto_pool.drain(self)
            finally:
                self._draining = False

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
            self._log = None

    def __enter__(self) -> "LocalPlatform":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
