from __future__ import annotations

import csv

import pytest

import crowdpipe as cp
from crowdpipe.canonical import parse_rfc3339
from crowdpipe.lineage import EVENT_ANSWERED, EVENT_PUBLISHED
from crowdpipe.report import write_report
from tests.conftest import FAST, bob_truth, bob_urls, run_bob


@pytest.fixture
def bob_store(tmp_path):
    db = tmp_path / "p.cpdb"
    with cp.CrowdContext("p", db_path=db, config=FAST) as ctx:
        run_bob(ctx)
    return db


def test_all_events_census(bob_store):
    events = cp.all_events(bob_store, "p")
    assert sum(1 for e in events if e.kind == EVENT_PUBLISHED) == 3
    assert sum(1 for e in events if e.kind == EVENT_ANSWERED) == 9
    for e in events:
        parse_rfc3339(e.ts)  # every event carries a well-formed timestamp
        if e.kind == EVENT_ANSWERED:
            assert e.worker_id
            assert e.answer in ("Yes", "No")


def test_task_history_orders_publication_first(bob_store):
    fp = cp.fingerprint(bob_urls()[0])
    events = cp.task_history(bob_store, "p", fp)
    assert events[0].kind == EVENT_PUBLISHED
    assert [e.kind for e in events[1:]] == [EVENT_ANSWERED] * 3
    assert len({e.worker_id for e in events[1:]}) == 3
    assert all(e.object_fingerprint == fp for e in events)


def test_task_history_unknown_object(bob_store):
    with pytest.raises(cp.UnknownObject):
        cp.task_history(bob_store, "p", "0" * 64)


def test_worker_assignments(bob_store):
    events = cp.worker_assignments(bob_store, "p", "sim-1")
    assert len(events) == 3
    assert all(e.worker_id == "sim-1" for e in events)
    assert cp.worker_assignments(bob_store, "p", "nobody") == []


def test_experiment_summary_reconciles(bob_store):
    summary = cp.experiment_summary(bob_store, "p")
    assert summary.tasks == 3
    assert summary.assignments == 9
    assert summary.workers == 3
    assert summary.tables["images"] == {"tasks": 3, "assignments": 9, "workers": 3}
    assert parse_rfc3339(summary.last_ts) >= parse_rfc3339(summary.first_ts)

    text = summary.render_text()
    assert "tasks:       3" in text
    assert "assignments: 9" in text

    as_dict = summary.to_dict()
    assert cp.canonical_json(as_dict)  # JSON-serializable


def test_summary_of_empty_state():
    summary = cp.experiment_summary(cp.StoreState(), "p")
    assert (summary.tasks, summary.assignments, summary.workers) == (0, 0, 0)
    assert summary.tables == {}


def test_lineage_accepts_state_or_path(bob_store):
    via_path = cp.experiment_summary(bob_store, "p")
    via_state = cp.experiment_summary(cp.replay(bob_store), "p")
    assert via_path == via_state


def test_report_files(bob_store, tmp_path):
    events = cp.all_events(bob_store, "p")
    summary = cp.experiment_summary(bob_store, "p")
    out = tmp_path / "report"
    written = write_report(events, summary, out)
    assert [p.name for p in written] == ["report.csv", "timeline.png", "workers.png"]
    for p in written:
        assert p.exists() and p.stat().st_size > 0
    with open(out / "report.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "kind"
    assert len(rows) == 1 + 12  # header + 3 published + 9 answered
    answered = [r for r in rows[1:] if r[0] == EVENT_ANSWERED]
    assert all(r[5] for r in answered)  # worker_id column filled


def test_report_on_empty_experiment(tmp_path):
    summary = cp.experiment_summary(cp.StoreState(), "p")
    written = write_report([], summary, tmp_path / "empty")
    assert all(p.exists() for p in written)
