"""Client abstraction over the platform: in-process, HTTP, or offline."""

from __future__ import annotations

import logging
from typing import Any

import requests

from ..errors import PlatformError, PlatformUnreachable, error_from_wire
from ..presenter import Presenter
from .local import LocalPlatform
from .types import Assignment, TaskRecord, TaskView

logger = logging.getLogger(__name__)


class PlatformClient:
    """Interface the pipeline publishes through. Implementations count their
    calls so tests can assert that cached reruns never touch the platform."""

    calls: int = 0

    def create_project(self, name: str, presenter: Presenter) -> str:
        raise NotImplementedError

    def publish(
        self, project_id: str, payload: dict, n_assignments: int, fingerprint: str
    ) -> TaskRecord:
        raise NotImplementedError

    def fetch_results(self, task_id: str) -> list[Assignment]:
        raise NotImplementedError

    def next_task(self, project_id: str, worker_id: str) -> TaskView | None:
        raise NotImplementedError

    def submit_answer(self, task_id: str, worker_id: str, answer: Any) -> Assignment:
        raise NotImplementedError

    def list_projects(self) -> list[dict]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class InProcessClient(PlatformClient):
    """Direct calls into an embedded LocalPlatform."""

    def __init__(self, platform: LocalPlatform):
        self.platform = platform
        self.calls = 0

    def create_project(self, name: str, presenter: Presenter) -> str:
        self.calls += 1
        return self.platform.create_project(name, presenter)

    def publish(self, project_id, payload, n_assignments, fingerprint) -> TaskRecord:
        self.calls += 1
        return self.platform.publish(project_id, payload, n_assignments, fingerprint)

    def fetch_results(self, task_id: str) -> list[Assignment]:
        self.calls += 1
        return self.platform.fetch_results(task_id)

    def next_task(self, project_id: str, worker_id: str) -> TaskView | None:
        self.calls += 1
        return self.platform.next_task(project_id, worker_id)

    def submit_answer(self, task_id: str, worker_id: str, answer) -> Assignment:
        self.calls += 1
        return self.platform.submit_answer(task_id, worker_id, answer)

    def list_projects(self) -> list[dict]:
        self.calls += 1
        return self.platform.list_projects()

    def close(self) -> None:
        self.platform.close()


class OfflineClient(PlatformClient):
    """Refuses every call. Stands in for an unreachable platform so tests can
    prove a cached rerun completes without one."""

    def __init__(self):
        self.calls = 0

    def _refuse(self, *_args, **_kwargs):
        self.calls += 1
        raise PlatformUnreachable("platform is offline")

    create_project = _refuse
    publish = _refuse
    fetch_results = _refuse
    next_task = _refuse
    submit_answer = _refuse
    list_projects = _refuse


class HttpClient(PlatformClient):
    """Talks to a served platform over its JSON HTTP API."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.calls = 0
        self._session = requests.Session()

    def _request(self, method: str, path: str, body: dict | None = None) -> Any:
        self.calls += 1
        url = f"{self.base_url}{path}"
        try:
            resp = self._session.request(method, url, json=body, timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise PlatformUnreachable(f"{method} {url}: {exc}")
        if resp.status_code >= 400:
            try:
                err = resp.json()
            except ValueError:
                err = {}
            raise error_from_wire(
                err.get("error", "platform_error"),
                err.get("detail", f"{method} {url} -> {resp.status_code}"),
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise PlatformError(f"invalid JSON from {url}: {exc}")

    def create_project(self, name: str, presenter: Presenter) -> str:
        data = self._request(
            "POST", "/api/projects", {"name": name, "presenter": presenter.to_dict()}
        )
        return data["project_id"]

    def publish(self, project_id, payload, n_assignments, fingerprint) -> TaskRecord:
        data = self._request(
            "POST",
            f"/api/projects/{project_id}/tasks",
            {
                "payload": payload,
                "n_assignments": n_assignments,
                "fingerprint": fingerprint,
            },
        )
        return TaskRecord.from_dict(data)

    def fetch_results(self, task_id: str) -> list[Assignment]:
        data = self._request("GET", f"/api/tasks/{task_id}/results")
        return [Assignment.from_dict(a) for a in data["assignments"]]

    def next_task(self, project_id: str, worker_id: str) -> TaskView | None:
        data = self._request(
            "GET", f"/api/projects/{project_id}/newtask?worker_id={worker_id}"
        )
        if data.get("task") is None:
            return None
        return TaskView.from_dict(data["task"])

    def submit_answer(self, task_id: str, worker_id: str, answer) -> Assignment:
        data = self._request(
            "POST",
            f"/api/tasks/{task_id}/answers",
            {"worker_id": worker_id, "answer": answer},
        )
        return Assignment.from_dict(data)

    def list_projects(self) -> list[dict]:
        data = self._request("GET", "/api/projects")
        return data["projects"]

    def close(self) -> None:
        self._session.close()
