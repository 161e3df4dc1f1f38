"""Render an experiment's lineage to files: a delimited event log plus
summary figures (assignment timeline, per-worker counts)."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .canonical import parse_rfc3339
from .lineage import EVENT_ANSWERED, LineageEvent, SummaryReport

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("kind", "table", "object_fingerprint", "task_id", "ts", "worker_id", "answer")


def write_events_csv(events: list[LineageEvent], path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for ev in events:
            writer.writerow(
                (
                    ev.kind,
                    ev.table,
                    ev.object_fingerprint,
                    ev.task_id,
                    ev.ts,
                    ev.worker_id or "",
                    "" if ev.answer is None else str(ev.answer),
                )
            )
    return path


def plot_timeline(events: list[LineageEvent], path: Path) -> Path:
    """Cumulative answered assignments over time."""
    stamps = sorted(
        parse_rfc3339(ev.ts) for ev in events if ev.kind == EVENT_ANSWERED
    )
    fig, ax = plt.subplots(figsize=(7, 4))
    if stamps:
        t0 = stamps[0]
        xs = [(t - t0).total_seconds() for t in stamps]
        ys = range(1, len(stamps) + 1)
        ax.step(xs, ys, where="post")
    ax.set_xlabel("seconds since first answer")
    ax.set_ylabel("assignments completed")
    ax.set_title("assignment timeline")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_worker_counts(events: list[LineageEvent], path: Path) -> Path:
    """Answered-assignment counts per worker."""
    counts: dict[str, int] = {}
    for ev in events:
        if ev.kind == EVENT_ANSWERED and ev.worker_id:
            counts[ev.worker_id] = counts.get(ev.worker_id, 0) + 1
    workers = sorted(counts)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(workers, [counts[w] for w in workers])
    ax.set_xlabel("worker")
    ax.set_ylabel("assignments")
    ax.set_title("assignments per worker")
    if workers:
        ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def write_report(
    events: list[LineageEvent], summary: SummaryReport, out_dir: Path
) -> list[Path]:
    """Write report.csv, timeline.png, and workers.png into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        write_events_csv(events, out_dir / "report.csv"),
        plot_timeline(events, out_dir / "timeline.png"),
        plot_worker_counts(events, out_dir / "workers.png"),
    ]
    for p in written:
        logger.info("wrote %s", p)
    return written
