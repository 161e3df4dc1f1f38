"""Answer aggregation: majority vote and Dawid-Skene style EM.

Both are pure and deterministic: ties are broken by the lexicographically
smallest label and flagged, never resolved silently or randomly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Any, Hashable, Mapping, Sequence

import numpy as np

from .errors import EmptyAssignments, NonEnumeratedLabels

EM_MAX_ITERS = 100
EM_TOL = 1e-6
EM_SMOOTHING = 1e-9


@dataclass(frozen=True)
class AggregateLabel:
    """Chosen label plus how contested it was."""

    label: Any
    support: int
    total: int
    tie: bool


@dataclass(frozen=True)
class WorkerModel:
    """Estimated per-worker confusion: P(given | true), plus the label prior."""

    worker_id: str
    confusion: dict
    prior: dict


def aggregate_one(labels: Sequence[Any]) -> AggregateLabel:
    """Majority vote over one object's answers."""
    if not labels:
        raise EmptyAssignments("cannot aggregate zero assignments")
    counts = Counter(labels)
    top = max(counts.values())
    winners = [label for label, c in counts.items() if c == top]
    label = min(winners, key=lambda l: str(l))
    return AggregateLabel(
        label=label, support=top, total=len(labels), tie=len(winners) > 1
    )


def majority_vote(assignments: Mapping[Hashable, Sequence[Any]]) -> dict:
    """Most frequent answer per object; ties -> smallest label, tie=True."""
    return {key: aggregate_one(labels) for key, labels in assignments.items()}


def em_dawid_skene(
    assignments: Mapping[Hashable, Sequence[tuple[str, Any]]],
    max_iters: int = EM_MAX_ITERS,
    tol: float = EM_TOL,
    label_space: Sequence[Any] | None = None,
    smoothing: float = EM_SMOOTHING,
) -> tuple[dict, dict]:
    """EM over worker confusion matrices, initialized from majority vote.

    ``assignments`` maps each object to its (worker_id, label) pairs. Stops
    when the max per-object posterior change drops below ``tol`` or after
    ``max_iters`` iterations. Returns (per-object AggregateLabel, per-worker
    WorkerModel); the label choice is the posterior argmax with the same
    tie-break as majority vote.
    """
    keys = list(assignments.keys())
    if not keys:
        return {}, {}
    for key in keys:
        if not assignments[key]:
            raise EmptyAssignments(f"object {key!r} has zero assignments")

    try:
        observed = {label for key in keys for _, label in assignments[key]}
    except TypeError as exc:
        raise NonEnumeratedLabels(f"labels must be hashable: {exc}")
    if label_space is None:
        labels = sorted(observed, key=str)
    else:
        labels = list(label_space)
        stray = observed - set(labels)
        if stray:
            raise NonEnumeratedLabels(
                f"answers outside the label space: {sorted(stray, key=str)}"
            )
    try:
        label_index = {label: i for i, label in enumerate(labels)}
    except TypeError as exc:
        raise NonEnumeratedLabels(f"labels must be hashable: {exc}")
    n_labels = len(labels)
    n_objects = len(keys)

    workers = sorted({w for key in keys for w, _ in assignments[key]})
    worker_index = {w: i for i, w in enumerate(workers)}
    # per worker: (object row, given-label column) of each of their answers
    votes: list[list[tuple[int, int]]] = [[] for _ in workers]
    counts = np.zeros((n_objects, n_labels))
    for i, key in enumerate(keys):
        for w, label in assignments[key]:
            votes[worker_index[w]].append((i, label_index[label]))
            counts[i, label_index[label]] += 1

    posteriors = counts / counts.sum(axis=1, keepdims=True)

    confusion = np.zeros((len(workers), n_labels, n_labels))
    for _ in range(max_iters):
        prior = posteriors.mean(axis=0)
        for wi in range(len(workers)):
            mat = np.full((n_labels, n_labels), smoothing)
            for i, g in votes[wi]:
                mat[:, g] += posteriors[i]
            confusion[wi] = mat / mat.sum(axis=1, keepdims=True)

        updated = np.tile(prior, (n_objects, 1))
        for wi in range(len(workers)):
            for i, g in votes[wi]:
                updated[i] *= confusion[wi][:, g]
        sums = updated.sum(axis=1, keepdims=True)
        degenerate = (sums == 0).ravel()
        if degenerate.any():
            updated[degenerate] = 1.0 / n_labels
            sums = updated.sum(axis=1, keepdims=True)
        updated /= sums

        delta = np.abs(updated - posteriors).max()
        posteriors = updated
        if delta < tol:
            break

    # final M-step so the reported models are consistent with the posteriors
    prior = posteriors.mean(axis=0)
    for wi in range(len(workers)):
        mat = np.full((n_labels, n_labels), smoothing)
        for i, g in votes[wi]:
            mat[:, g] += posteriors[i]
        confusion[wi] = mat / mat.sum(axis=1, keepdims=True)

    aggregates = {}
    for i, key in enumerate(keys):
        row = posteriors[i]
        top = row.max()
        winners = [labels[j] for j in range(n_labels) if row[j] == top]
        label = min(winners, key=lambda l: str(l))
        vote_count = Counter(l for _, l in assignments[key])
        aggregates[key] = AggregateLabel(
            label=label,
            support=vote_count.get(label, 0),
            total=len(assignments[key]),
            tie=len(winners) > 1,
        )

    prior_map = {labels[j]: float(prior[j]) for j in range(n_labels)}
    models = {}
    for w, wi in worker_index.items():
        models[w] = WorkerModel(
            worker_id=w,
            confusion={
                labels[t]: {labels[g]: float(confusion[wi][t, g]) for g in range(n_labels)}
                for t in range(n_labels)
            },
            prior=prior_map,
        )
    return aggregates, models
