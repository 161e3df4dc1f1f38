"""Lineage queries: when was each task published, who answered it.

All queries run over a replayed snapshot of a store file and never write,
so an experiment can be examined without its platform (or its author)
being reachable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import UnknownObject
from .store import KIND_ASSIGNMENT, KIND_TASK, StoreState, replay

EVENT_PUBLISHED = "published"
EVENT_ANSWERED = "answered"


@dataclass(frozen=True)
class LineageEvent:
    kind: str
    object_fingerprint: str
    task_id: str
    ts: str
    table: str
    worker_id: str | None = None
    answer: Any | None = None

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "object_fingerprint": self.object_fingerprint,
            "task_id": self.task_id,
            "ts": self.ts,
            "table": self.table,
        }
        if self.kind == EVENT_ANSWERED:
            out["worker_id"] = self.worker_id
            out["answer"] = self.answer
        return out


@dataclass
class SummaryReport:
    project: str
    tasks: int = 0
    assignments: int = 0
    workers: int = 0
    first_ts: str | None = None
    last_ts: str | None = None
    tables: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "project": self.project,
            "tasks": self.tasks,
            "assignments": self.assignments,
            "workers": self.workers,
            "first_ts": self.first_ts,
            "last_ts": self.last_ts,
            "tables": self.tables,
        }

    def render_text(self) -> str:
        lines = [
            f"project:     {self.project}",
            f"tasks:       {self.tasks}",
            f"assignments: {self.assignments}",
            f"workers:     {self.workers}",
            f"first event: {self.first_ts or '-'}",
            f"last event:  {self.last_ts or '-'}",
        ]
        if self.tables:
            lines.append("tables:")
            for name in sorted(self.tables):
                t = self.tables[name]
                lines.append(
                    f"  {name}: tasks={t['tasks']} assignments={t['assignments']} "
                    f"workers={t['workers']}"
                )
        return "\n".join(lines)


def _snapshot(store: StoreState | str | Path) -> StoreState:
    if isinstance(store, StoreState):
        return store
    return replay(store)


def _events(state: StoreState, project: str) -> list[LineageEvent]:
    events = []
    for rec in state.records:
        if rec.project != project:
            continue
        if rec.kind == KIND_TASK:
            events.append(
                LineageEvent(
                    kind=EVENT_PUBLISHED,
                    object_fingerprint=rec.key,
                    task_id=rec.payload["task_id"],
                    ts=rec.payload["published_at"],
                    table=rec.table,
                )
            )
        elif rec.kind == KIND_ASSIGNMENT:
            events.append(
                LineageEvent(
                    kind=EVENT_ANSWERED,
                    object_fingerprint=rec.key,
                    task_id=rec.payload["task_id"],
                    ts=rec.payload["submitted_at"],
                    table=rec.table,
                    worker_id=rec.payload["worker_id"],
                    answer=rec.payload["answer"],
                )
            )
    return events


def all_events(store: StoreState | str | Path, project: str) -> list[LineageEvent]:
    """Every publication / answer event for a project, in store order."""
    return _events(_snapshot(store), project)


def task_history(
    store: StoreState | str | Path, project: str, object_fingerprint: str
) -> list[LineageEvent]:
    """Publication then answers for one object, in store order."""
    state = _snapshot(store)
    events = [
        e for e in _events(state, project) if e.object_fingerprint == object_fingerprint
    ]
    if not events:
        raise UnknownObject(
            f"no records for fingerprint {object_fingerprint} in project {project!r}"
        )
    return events


def worker_assignments(
    store: StoreState | str | Path, project: str, worker_id: str
) -> list[LineageEvent]:
    """Everything one worker answered, in store order. Unknown worker -> empty."""
    state = _snapshot(store)
    return [
        e
        for e in _events(state, project)
        if e.kind == EVENT_ANSWERED and e.worker_id == worker_id
    ]


def experiment_summary(store: StoreState | str | Path, project: str) -> SummaryReport:
    """Census of the experiment: counts, distinct workers, event time range,
    and a per-table breakdown."""
    state = _snapshot(store)
    report = SummaryReport(project=project)
    workers: set[str] = set()
    stamps: list[str] = []
    for event in _events(state, project):
        table = report.tables.setdefault(
            event.table or "-", {"tasks": 0, "assignments": 0, "workers": 0, "_w": set()}
        )
        stamps.append(event.ts)
        if event.kind == EVENT_PUBLISHED:
            report.tasks += 1
            table["tasks"] += 1
        else:
            report.assignments += 1
            table["assignments"] += 1
            workers.add(event.worker_id)
            table["_w"].add(event.worker_id)
    report.workers = len(workers)
    if stamps:
        report.first_ts = min(stamps)
        report.last_ts = max(stamps)
    for table in report.tables.values():
        table["workers"] = len(table.pop("_w"))
    return report
