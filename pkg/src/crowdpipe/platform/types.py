"""Shared platform data types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class TaskRecord:
    """A published task. Status is derived from the assignment count."""

    task_id: str
    project_id: str
    fingerprint: str
    payload: dict
    n_assignments: int
    published_at: str

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "project_id": self.project_id,
            "fingerprint": self.fingerprint,
            "payload": self.payload,
            "n_assignments": self.n_assignments,
            "published_at": self.published_at,
        }

    @staticmethod
    def from_dict(data: dict) -> "TaskRecord":
        return TaskRecord(
            task_id=data["task_id"],
            project_id=data["project_id"],
            fingerprint=data["fingerprint"],
            payload=data["payload"],
            n_assignments=data["n_assignments"],
            published_at=data["published_at"],
        )


@dataclass(frozen=True)
class Assignment:
    """One worker's answer to one task — the unit of lineage."""

    task_id: str
    worker_id: str
    answer: Any
    submitted_at: str

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "worker_id": self.worker_id,
            "answer": self.answer,
            "submitted_at": self.submitted_at,
        }

    @staticmethod
    def from_dict(data: dict) -> "Assignment":
        return Assignment(
            task_id=data["task_id"],
            worker_id=data["worker_id"],
            answer=data["answer"],
            submitted_at=data["submitted_at"],
        )


@dataclass(frozen=True)
class TaskView:
    """Worker-facing view of a task, as served by the newtask endpoint."""

    task_id: str
    project_id: str
    fingerprint: str
    payload: dict
    n_assignments: int
    template: str
    schema: dict

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "project_id": self.project_id,
            "fingerprint": self.fingerprint,
            "payload": self.payload,
            "n_assignments": self.n_assignments,
            "template": self.template,
            "schema": self.schema,
        }

    @staticmethod
    def from_dict(data: dict) -> "TaskView":
        return TaskView(
            task_id=data["task_id"],
            project_id=data["project_id"],
            fingerprint=data["fingerprint"],
            payload=data["payload"],
            n_assignments=data["n_assignments"],
            template=data["template"],
            schema=data["schema"],
        )


@dataclass(frozen=True)
class WorkerProfile:
    """A simulated worker: seeded accuracy and latency, or a human identity."""

    worker_id: str
    accuracy: float = 1.0
    latency_ms: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {self.accuracy}")
        lo, hi = self.latency_ms
        if lo < 0 or hi < lo:
            raise ValueError(f"invalid latency bounds {self.latency_ms}")
