"""Append-only durable store (the ``.cpdb`` file).

The log is the database: a single header line followed by one JSON record
per line, each carrying a crc32 over its canonical serialization. Replaying
the file reconstructs the full state; a truncated or checksum-failing final
record is treated as an interrupted write and dropped, while corruption
anywhere earlier is a hard error. This is what lets a rerun behave as if the
process never crashed, and what makes the file shareable as-is.
"""

from __future__ import annotations

import fcntl
import json
import logging
import os
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .canonical import canonical_bytes, canonical_json, utc_now_rfc3339
from .errors import (
    CorruptLog,
    DuplicateTaskKey,
    StoreError,
    StoreLocked,
    VersionMismatch,
)

logger = logging.getLogger(__name__)

FORMAT_NAME = "cpdb"
FORMAT_VERSION = 1
HEADER_LINE = canonical_json({"format": FORMAT_NAME, "version": FORMAT_VERSION}) + "\n"

KIND_TASK = "task"
KIND_ASSIGNMENT = "assignment"
KIND_META = "project-meta"
KINDS = (KIND_TASK, KIND_ASSIGNMENT, KIND_META)


@dataclass(frozen=True)
class CacheRecord:
    """One durable log entry."""

    seq: int
    ts: str
    project: str
    table: str
    kind: str
    key: str
    payload: Any

    def to_wire(self) -> dict:
        body = {
            "seq": self.seq,
            "ts": self.ts,
            "project": self.project,
            "table": self.table,
            "kind": self.kind,
            "key": self.key,
            "payload": self.payload,
        }
        body["crc32"] = zlib.crc32(canonical_bytes(body))
        return body

    @staticmethod
    def from_wire(body: dict) -> "CacheRecord":
        body = dict(body)
        crc = body.pop("crc32", None)
        if crc is None or zlib.crc32(canonical_bytes(body)) != crc:
            raise ValueError("crc mismatch")
        return CacheRecord(
            seq=body["seq"],
            ts=body["ts"],
            project=body["project"],
            table=body["table"],
            kind=body["kind"],
            key=body["key"],
            payload=body["payload"],
        )


@dataclass
class StoreState:
    """In-memory index rebuilt from the log.

    ``valid_bytes`` is the offset just past the last valid record; a writer
    reopening the file truncates to it, physically discarding any
    interrupted tail before appending.
    """

    records: list[CacheRecord] = field(default_factory=list)
    tasks_by_key: dict[str, CacheRecord] = field(default_factory=dict)
    assignments_by_key: dict[str, list[CacheRecord]] = field(default_factory=dict)
    meta_by_key: dict[str, CacheRecord] = field(default_factory=dict)
    valid_bytes: int = 0
    dropped_tail: bool = False
    last_seq: int = 0

    def index(self, record: CacheRecord) -> None:
        if record.seq <= self.last_seq:
            raise CorruptLog(
                f"seq {record.seq} not strictly increasing after {self.last_seq}"
            )
        if record.kind == KIND_TASK:
            existing = self.tasks_by_key.get(record.key)
            if existing is not None:
                if existing.payload != record.payload:
                    raise CorruptLog(
                        f"conflicting task records for key {record.key}"
                    )
                # identical duplicate: tolerated, first one wins
            else:
                self.tasks_by_key[record.key] = record
        elif record.kind == KIND_ASSIGNMENT:
            self.assignments_by_key.setdefault(record.key, []).append(record)
        elif record.kind == KIND_META:
            self.meta_by_key[record.key] = record  # latest wins
        else:
            raise CorruptLog(f"unknown record kind {record.kind!r}")
        self.records.append(record)
        self.last_seq = record.seq

    def get(self, kind: str, key: str):
        """Lookup by (kind, key): one record for task/meta, many for assignment."""
        if kind == KIND_TASK:
            return self.tasks_by_key.get(key)
        if kind == KIND_META:
            return self.meta_by_key.get(key)
        if kind == KIND_ASSIGNMENT:
            return list(self.assignments_by_key.get(key, ()))
        raise ValueError(f"unknown kind {kind!r}")

    def find_assignment(self, key: str, task_id: str, worker_id: str) -> CacheRecord | None:
        for rec in self.assignments_by_key.get(key, ()):
            if (
                rec.payload.get("task_id") == task_id
                and rec.payload.get("worker_id") == worker_id
            ):
                return rec
        return None


def replay(path: str | os.PathLike) -> StoreState:
    """Rebuild a StoreState from a ``.cpdb`` file.

    Deterministic and read-only; safe on a snapshot of a live writer's file.
    """
    state = StoreState()
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        raise StoreError(f"store file not found: {path}")
    except OSError as exc:
        raise StoreError(f"cannot read store file {path}: {exc}")

    if not data:
        return state

    # A record is only complete once its trailing newline hit the disk; a
    # final chunk without one is an interrupted write, even if it parses.
    lines = data.split(b"\n")
    newline_missing = lines[-1] != b""
    if not newline_missing:
        lines.pop()

    for i, raw in enumerate(lines):
        is_final = i == len(lines) - 1

        def _drop(reason: str) -> StoreState:
            logger.warning(
                "dropping interrupted final record of %s (%s)", path, reason
            )
            state.dropped_tail = True
            return state

        if is_final and newline_missing:
            return _drop("no trailing newline")
        try:
            body = json.loads(raw.decode("utf-8"))
            if not isinstance(body, dict):
                raise ValueError("record is not an object")
        except (ValueError, UnicodeDecodeError):
            # a complete (newline-terminated) first line that isn't a header
            # means this was never a cpdb file, not an interrupted write
            if i == 0:
                raise CorruptLog(f"{path} is not a cpdb file")
            if is_final:
                return _drop("unparseable")
            raise CorruptLog(f"unparseable record on line {i + 1} of {path}")

        if i == 0:
            if body.get("format") != FORMAT_NAME:
                raise CorruptLog(f"{path} is not a cpdb file")
            if body.get("version") != FORMAT_VERSION:
                raise VersionMismatch(
                    f"unsupported cpdb version {body.get('version')!r}"
                )
            state.valid_bytes += len(raw) + 1
            continue

        try:
            record = CacheRecord.from_wire(body)
        except ValueError:
            if is_final:
                return _drop("checksum failure")
            raise CorruptLog(f"checksum failure on line {i + 1} of {path}")
        # semantic corruption (seq regression, conflicting task payloads) is
        # a hard error even on the final record: the bytes were fully written
        state.index(record)
        state.valid_bytes += len(raw) + 1

    return state


class Store:
    """Exclusive writer over one ``.cpdb`` file.

    Exactly one live Store per file: an advisory ``flock`` is held for the
    Store's lifetime. Readers use :func:`replay` instead and need no lock.
    """

    def __init__(self, path: str | os.PathLike, project: str):
        self.path = Path(path)
        self.project = project
        self._fh = None
        self._open()

    def _open(self) -> None:
        fresh = not self.path.exists()
        try:
            fh = open(self.path, "a+b")
        except OSError as exc:
            raise StoreError(f"cannot open store {self.path}: {exc}")
        try:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            fh.close()
            raise StoreLocked(f"store {self.path} is already open in another context")

        if fresh or self.path.stat().st_size == 0:
            fh.write(HEADER_LINE.encode("utf-8"))
            fh.flush()
            os.fsync(fh.fileno())
            self.state = StoreState()
            self.state.valid_bytes = len(HEADER_LINE)
        else:
            try:
                self.state = replay(self.path)
            except StoreError:
                fh.close()
                raise
            if self.state.valid_bytes == 0:
                # only possible when the header itself was interrupted
                fh.truncate(0)
                fh.write(HEADER_LINE.encode("utf-8"))
                self.state.valid_bytes = len(HEADER_LINE)
            elif self.state.dropped_tail:
                fh.truncate(self.state.valid_bytes)
            fh.flush()
            os.fsync(fh.fileno())
        self._fh = fh
        self._dirty = False

    def put(
        self,
        kind: str,
        key: str,
        payload: Any,
        table: str = "",
        sync: bool = True,
    ) -> CacheRecord:
        """Append one record, durably by default.

        Identical (kind, key, payload) puts are no-ops returning the existing
        record; a task put whose payload conflicts with the stored one raises
        DuplicateTaskKey.
        """
        if self._fh is None:
            raise StoreError("store is closed")
        if kind not in KINDS:
            raise ValueError(f"unknown record kind {kind!r}")

        if kind == KIND_TASK:
            existing = self.state.tasks_by_key.get(key)
            if existing is not None:
                if existing.payload != payload:
                    raise DuplicateTaskKey(
                        f"task record for key {key} already stored with a different payload"
                    )
                return existing
        elif kind == KIND_ASSIGNMENT:
            for rec in self.state.assignments_by_key.get(key, ()):
                if rec.payload == payload:
                    return rec
        elif kind == KIND_META:
            existing = self.state.meta_by_key.get(key)
            if existing is not None and existing.payload == payload:
                return existing

        record = CacheRecord(
            seq=self.state.last_seq + 1,
            ts=utc_now_rfc3339(),
            project=self.project,
            table=table,
            kind=kind,
            key=key,
            payload=payload,
        )
        line = (canonical_json(record.to_wire()) + "\n").encode("utf-8")
        try:
            self._fh.write(line)
            self._fh.flush()
            if sync:
                os.fsync(self._fh.fileno())
            else:
                self._dirty = True
        except OSError as exc:
            raise StoreError(f"append to {self.path} failed: {exc}")
        self.state.index(record)
        self.state.valid_bytes += len(line)
        return record

    def sync(self) -> None:
        """Flush any deferred appends to stable storage."""
        if self._fh is not None and self._dirty:
            os.fsync(self._fh.fileno())
            self._dirty = False

    def get(self, kind: str, key: str):
        return self.state.get(kind, key)

    def close(self) -> None:
        if self._fh is not None:
            self.sync()
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_UN)
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def cache_put(store: Store, kind: str, key: str, payload: Any, table: str = "") -> CacheRecord:
    return store.put(kind, key, payload, table=table)


def cache_get(store: Store, kind: str, key: str):
    return store.get(kind, key)


def summarize(state: StoreState) -> dict:
    """Per-kind census of a replayed store, for the replay CLI."""
    kinds: dict[str, int] = {}
    tables: set[str] = set()
    projects: set[str] = set()
    for rec in state.records:
        kinds[rec.kind] = kinds.get(rec.kind, 0) + 1
        if rec.table:
            tables.add(rec.table)
        projects.add(rec.project)
    return {
        "records": len(state.records),
        "kinds": kinds,
        "projects": sorted(projects),
        "tables": sorted(tables),
        "last_seq": state.last_seq,
        "dropped_tail": state.dropped_tail,
    }


def iter_kind(state: StoreState, kind: str) -> Iterable[CacheRecord]:
    return (rec for rec in state.records if rec.kind == kind)
