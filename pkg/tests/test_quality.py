from __future__ import annotations

import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import crowdpipe as cp
from crowdpipe.quality import aggregate_one, em_dawid_skene, majority_vote


def oracle_mv(labels):
    """Independent brute-force majority count with lexicographic-min tie-break."""
    counts = Counter(labels)
    best = max(counts.values())
    winners = sorted((l for l, c in counts.items() if c == best), key=str)
    return winners[0], best, len(labels), len(winners) > 1


def test_majority_fixed_cases():
    got = aggregate_one(["Yes", "Yes", "No"])
    assert (got.label, got.support, got.total, got.tie) == ("Yes", 2, 3, False)
    got = aggregate_one(["Yes", "No"])
    assert (got.label, got.support, got.total, got.tie) == ("No", 1, 2, True)
    got = aggregate_one(["a"])
    assert (got.label, got.support, got.total, got.tie) == ("a", 1, 1, False)


def test_majority_empty_rejected():
    with pytest.raises(cp.EmptyAssignments):
        aggregate_one([])
    with pytest.raises(cp.EmptyAssignments):
        majority_vote({"k": []})


def test_majority_matches_oracle_on_random_instances():
    rng = random.Random(20240817)
    for _ in range(1000):
        label_space = [f"L{i}" for i in range(rng.randint(1, 4))]
        labels = [rng.choice(label_space) for _ in range(rng.randint(1, 7))]
        got = aggregate_one(labels)
        assert (got.label, got.support, got.total, got.tie) == oracle_mv(labels)


@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=9))
def test_majority_properties(labels):
    got = aggregate_one(labels)
    counts = Counter(labels)
    assert got.label in counts
    assert got.support == counts[got.label] == max(counts.values())
    assert got.total == len(labels)
    assert got.tie == (sum(1 for c in counts.values() if c == got.support) > 1)


def test_majority_vote_maps_keys():
    out = majority_vote({1: ["x", "x"], 2: ["y", "z"]})
    assert out[1].label == "x" and not out[1].tie
    assert out[2].label == "y" and out[2].tie


# -- EM ------------------------------------------------------------------------


def votes_for(truth: dict, accuracies: dict, labels: list[str], seed: int):
    """Simulate worker votes: correct with the worker's accuracy, otherwise a
    uniformly random wrong label."""
    rng = random.Random(seed)
    out = {}
    for obj, true_label in truth.items():
        votes = []
        for worker, acc in accuracies.items():
            if rng.random() < acc:
                votes.append((worker, true_label))
            else:
                wrong = [l for l in labels if l != true_label]
                votes.append((worker, rng.choice(wrong)))
        out[obj] = votes
    return out


def label_accuracy(estimates, truth):
    hits = sum(1 for k, agg in estimates.items() if agg.label == truth[k])
    return hits / len(truth)


def test_em_equals_mv_on_unanimous_votes():
    assignments = {
        i: [("w1", lab), ("w2", lab), ("w3", lab)]
        for i, lab in enumerate(["Yes", "No", "Yes", "Yes"])
    }
    est, models = em_dawid_skene(assignments, label_space=["Yes", "No"])
    for i, lab in enumerate(["Yes", "No", "Yes", "Yes"]):
        assert est[i].label == lab
        assert not est[i].tie
    for m in models.values():
        for row in m.confusion.values():
            assert sum(row.values()) == pytest.approx(1.0, abs=1e-9)


def test_em_single_worker_is_identity():
    assignments = {i: [("w", lab)] for i, lab in enumerate(["a", "b", "a"])}
    est, _ = em_dawid_skene(assignments)
    assert [est[i].label for i in range(3)] == ["a", "b", "a"]


def test_em_deterministic():
    truth = {i: ("Yes" if i % 3 else "No") for i in range(60)}
    accs = {"w1": 0.95, "w2": 0.6, "w3": 0.6}
    assignments = votes_for(truth, accs, ["Yes", "No"], seed=5)
    first = em_dawid_skene(assignments, label_space=["Yes", "No"])
    second = em_dawid_skene(assignments, label_space=["Yes", "No"])
    assert first[0] == second[0]
    assert first[1] == second[1]


def test_em_never_worse_than_mv_on_mixed_accuracy_pool():
    labels = ["Yes", "No"]
    truth = {i: labels[i % 2] for i in range(200)}
    accs = {"good": 0.95, "w2": 0.6, "w3": 0.6, "w4": 0.6}
    assignments = votes_for(truth, accs, labels, seed=99)
    mv = majority_vote({k: [lab for _, lab in v] for k, v in assignments.items()})
    em, models = em_dawid_skene(assignments, label_space=labels)
    assert label_accuracy(em, truth) >= label_accuracy(mv, truth)
    # the reliable worker should be recognized as such
    good_diag = np.mean(
        [models["good"].confusion[l][l] for l in labels]
    )
    weak_diag = np.mean([models["w2"].confusion[l][l] for l in labels])
    assert good_diag > weak_diag


def test_em_rejects_out_of_space_labels():
    with pytest.raises(cp.NonEnumeratedLabels):
        em_dawid_skene({1: [("w", "Maybe")]}, label_space=["Yes", "No"])


def test_em_rejects_unhashable_free_text_surrogate():
    with pytest.raises(cp.NonEnumeratedLabels):
        em_dawid_skene({1: [("w", ["not", "a", "label"])]})


def test_em_empty_object_rejected():
    with pytest.raises(cp.EmptyAssignments):
        em_dawid_skene({1: []})


def test_em_posteriors_are_distributions():
    truth = {i: "ab"[i % 2] for i in range(30)}
    assignments = votes_for(truth, {"w1": 0.8, "w2": 0.7}, ["a", "b"], seed=3)
    est, models = em_dawid_skene(assignments, label_space=["a", "b"])
    for m in models.values():
        assert sum(m.prior.values()) == pytest.approx(1.0, abs=1e-9)
        for row in m.confusion.values():
            assert sum(row.values()) == pytest.approx(1.0, abs=1e-9)
            for p in row.values():
                assert -1e-12 <= p <= 1 + 1e-12
    for agg in est.values():
        assert agg.label in ("a", "b")
        assert 0 < agg.support <= agg.total == 2
