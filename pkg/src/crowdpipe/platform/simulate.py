"""Seeded simulated workers.

A worker pool drives any platform surface (in-process or HTTP client)
through the same task-assignment endpoints a human would use: take the next
task, answer it, repeat. Deterministic mode serializes workers round-robin
with a logical clock, so a transcript is a pure function of the profiles,
the ground truth, the pending task set, and the seeds.
"""

from __future__ import annotations

import logging
import random
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from ..canonical import format_rfc3339, utc_now_rfc3339
from ..errors import AlreadyAnswered, MissingGroundTruth, TaskComplete
from .types import TaskView, WorkerProfile

logger = logging.getLogger(__name__)

LOGICAL_EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)

MODE_DETERMINISTIC = "deterministic"
MODE_CONCURRENT = "concurrent"


@dataclass(frozen=True)
class TranscriptEntry:
    worker_id: str
    task_id: str
    answer: str
    ts: str

    def to_dict(self) -> dict:
        return {
            "worker_id": self.worker_id,
            "task_id": self.task_id,
            "answer": self.answer,
            "ts": self.ts,
        }


class WorkerPool:
    """Simulated workers bound to a ground-truth label map.

    The pool keeps per-worker RNG state across drains, so it can be attached
    to a platform and answer tasks as they appear.
    """

    def __init__(
        self,
        profiles: list[WorkerProfile],
        ground_truth: dict[str, str],
        mode: str = MODE_DETERMINISTIC,
    ):
        if mode not in (MODE_DETERMINISTIC, MODE_CONCURRENT):
            raise ValueError(f"unknown simulation mode {mode!r}")
        self.profiles = list(profiles)
        self.ground_truth = dict(ground_truth)
        self.mode = mode
        self.transcript: list[TranscriptEntry] = []
        self._rngs = {p.worker_id: random.Random(p.seed) for p in self.profiles}
        self._logical_ms = 0
        self._tlock = threading.Lock()

    # -- internals -----------------------------------------------------------

    def _answer_for(self, profile: WorkerProfile, view: TaskView) -> str:
        truth = self.ground_truth.get(view.fingerprint)
        if truth is None:
            raise MissingGroundTruth(
                f"no ground-truth label for task {view.task_id} "
                f"(fingerprint {view.fingerprint})"
            )
        rng = self._rngs[profile.worker_id]
        correct = rng.random() < profile.accuracy
        if correct:
            return truth
        labels = view.schema.get("labels") or []
        wrong = sorted(set(labels) - {truth})
        if not wrong:
            return f"{truth}-wrong"
        return wrong[rng.randrange(len(wrong))]

    def _stamp(self, profile: WorkerProfile) -> str:
        rng = self._rngs[profile.worker_id]
        lo, hi = profile.latency_ms
        delay = rng.uniform(lo, hi) if hi > 0 else 0.0
        if self.mode == MODE_DETERMINISTIC:
            self._logical_ms += 1 + int(delay)
            return format_rfc3339(LOGICAL_EPOCH + timedelta(milliseconds=self._logical_ms))
        if delay:
            threading.Event().wait(delay / 1000.0)
        return utc_now_rfc3339()

    def _take_one(self, platform, profile: WorkerProfile, project_ids: list[str]) -> bool:
        """One worker answers at most one task; returns True on progress."""
        for pid in project_ids:
            view = platform.next_task(pid, profile.worker_id)
            if view is None:
                continue
            ts = self._stamp(profile)
            answer = self._answer_for(profile, view)
            try:
                platform.submit_answer(view.task_id, profile.worker_id, answer)
            except (TaskComplete, AlreadyAnswered):
                continue  # lost a race in concurrent mode; move on
            with self._tlock:
                self.transcript.append(
                    TranscriptEntry(profile.worker_id, view.task_id, answer, ts)
                )
            return True
        return False

    @staticmethod
    def _project_ids(platform) -> list[str]:
        return [p["project_id"] for p in platform.list_projects()]

    # -- driving -------------------------------------------------------------

    def drain(self, platform) -> list[TranscriptEntry]:
        """Answer until no worker can take another task."""
        start = len(self.transcript)
        if self.mode == MODE_CONCURRENT:
            self._drain_concurrent(platform)
        else:
            project_ids = self._project_ids(platform)
            progress = True
            while progress:
                progress = False
                for profile in self.profiles:
                    if self._take_one(platform, profile, project_ids):
                        progress = True
        return self.transcript[start:]

    def _drain_concurrent(self, platform) -> None:
        project_ids = self._project_ids(platform)
        errors: list[BaseException] = []

        def work(profile: WorkerProfile) -> None:
            try:
                while self._take_one(platform, profile, project_ids):
                    pass
            except BaseException as exc:  # surfaced after join
                errors.append(exc)

        threads = [
            threading.Thread(target=work, args=(p,), daemon=True)
            for p in self.profiles
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if errors:
            raise errors[0]


def simulate_workers(
    platform,
    profiles: list[WorkerProfile],
    ground_truth: dict[str, str],
    mode: str = MODE_DETERMINISTIC,
) -> list[TranscriptEntry]:
    """Run a fresh pool until the platform has no pending tasks left.

    Every pending task's fingerprint must have a ground-truth label; with an
    in-process platform this is checked up front, over a client it surfaces
    as MissingGroundTruth when the task is handed out.
    """
    if hasattr(platform, "pending_tasks"):
        missing = [
            t.task_id
            for t in platform.pending_tasks()
            if t.fingerprint not in ground_truth
        ]
        if missing:
            raise MissingGroundTruth(
                f"pending tasks without ground truth: {', '.join(missing)}"
            )
    pool = WorkerPool(profiles, ground_truth, mode=mode)
    return pool.drain(platform)


def make_profiles(
    count: int,
    accuracy: float = 1.0,
    seed: int = 0,
    latency_ms: tuple[float, float] = (0.0, 0.0),
) -> list[WorkerProfile]:
    """Uniform worker pool: ids sim-1..sim-N, per-worker seeds derived from seed."""
    return [
        WorkerProfile(
            worker_id=f"sim-{i}",
            accuracy=accuracy,
            latency_ms=latency_ms,
            seed=seed + i,
        )
        for i in range(1, count + 1)
    ]
