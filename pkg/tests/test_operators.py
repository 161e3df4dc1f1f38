from __future__ import annotations

import re

import pytest

import crowdpipe as cp
from crowdpipe.operators import (
    MATCH,
    NONMATCH,
    SOURCE_CROWD,
    SOURCE_DEDUCED,
    SOURCE_PRUNED,
    _MatchGraph,
    order_pairs,
    pair_fingerprint,
    record_text,
)
from tests.conftest import FAST


def er_context(ctx_factory, objects, clusters, project="er", accuracy=1.0, seed=3):
    ctx = ctx_factory(project)
    truth = cp.build_pair_truth(objects, clusters)
    ctx.attach_simulator(cp.make_profiles(3, accuracy=accuracy, seed=seed), truth)
    return ctx, truth


def oracle_jaccard(a: str, b: str) -> float:
    """Independent similarity oracle: token sets via regex split."""
    ta = {t for t in re.split(r"\s+", a.lower()) if t}
    tb = {t for t in re.split(r"\s+", b.lower()) if t}
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


def test_token_jaccard_cases():
    assert cp.token_jaccard("iPad 2nd Gen", "iPad Two") == pytest.approx(0.25)
    assert cp.token_jaccard("same thing", "same thing") == 1.0
    assert cp.token_jaccard("alpha", "beta") == 0.0
    assert cp.token_jaccard("", "") == 1.0
    assert cp.token_jaccard("Case", "case") == 1.0


def test_record_text_flattens_dicts_in_key_order():
    assert record_text({"b": "two", "a": "one"}) == "one two"
    assert record_text("plain") == "plain"


def test_build_pair_truth_counts():
    objects = ["a1", "a2", "b1", "b2"]
    truth = cp.build_pair_truth(objects, ["A", "A", "B", "B"])
    assert len(truth) == 6
    assert sum(1 for v in truth.values() if v == MATCH) == 2
    with pytest.raises(ValueError):
        cp.build_pair_truth(objects, ["A"])


def test_simple_self_join_counts_and_verdicts(ctx_factory):
    objects = ["red apple", "apple red", "green pear"]
    ctx, truth = er_context(ctx_factory, objects, ["A", "A", "B"])
    data = ctx.crowd_data(objects, "items")
    result = cp.simple_join(data)
    assert len(result.pairs) == 3  # C(3,2)
    assert result.published == 3
    for p in result.pairs:
        assert p.verdict == truth[p.pair_fingerprint]
        assert p.source == SOURCE_CROWD
    assert {(p.left_id, p.right_id) for p in result.matches} == {(1, 2)}


def test_simple_cross_join_is_full_product(ctx_factory):
    left = ["l1", "l2"]
    right = ["r1", "r2"]
    ctx = ctx_factory("cross")
    truth = {
        pair_fingerprint(l, r): (MATCH if l[1:] == r[1:] else NONMATCH)
        for l in left
        for r in right
    }
    ctx.attach_simulator(cp.make_profiles(3, seed=5), truth)
    a = ctx.crowd_data(left, "left")
    b = ctx.crowd_data(right, "right")
    result = cp.simple_join(a, b)
    assert len(result.pairs) == 4  # |A| * |B|
    assert len(result.matches) == 2


def test_join_rejects_wrong_presenter(ctx_factory):
    ctx = ctx_factory()
    data = ctx.crowd_data(["a", "b"], "t")
    with pytest.raises(cp.InvalidPresenter):
        cp.simple_join(data, presenter=cp.image_label_presenter())


def test_filtered_join_threshold_validation(ctx_factory):
    ctx = ctx_factory()
    data = ctx.crowd_data(["a", "b"], "t")
    for bad in (-0.01, 1.01, 5):
        with pytest.raises(cp.InvalidThreshold):
            cp.filtered_join(data, tau=bad)


def test_filtered_join_tau_zero_equals_simple_task_set(ctx_factory):
    objects = ["red apple", "apple red", "green pear"]
    ctx, _ = er_context(ctx_factory, objects, ["A", "A", "B"])
    data = ctx.crowd_data(objects, "items")
    filtered = cp.filtered_join(data, tau=0.0)
    data2 = ctx.crowd_data(objects, "items2")
    simple = cp.simple_join(data2)
    assert filtered.pruned == 0
    assert {p.pair_fingerprint for p in filtered.pairs if p.source == SOURCE_CROWD} == {
        p.pair_fingerprint for p in simple.pairs
    }
    assert filtered.verdict_map() == simple.verdict_map()


def test_filtered_join_tau_one_prunes_everything(ctx_factory):
    objects = ["alpha one", "beta two", "gamma three"]
    ctx, _ = er_context(ctx_factory, objects, ["A", "B", "C"])
    data = ctx.crowd_data(objects, "items")
    result = cp.filtered_join(data, tau=1.0)
    assert result.published == 0
    assert result.pruned == 3
    assert all(p.verdict == NONMATCH and p.source == SOURCE_PRUNED for p in result.pairs)
    assert ctx.platform_client.calls == 0  # crowd never consulted
    assert ctx.embedded_platform.task_count() == 0


def test_filtered_join_prunes_exactly_below_tau(ctx_factory):
    fixture = [
        "apple iphone 12",
        "iphone 12 apple",
        "apple iphone 13 pro",
        "samsung galaxy s21",
        "galaxy s21 samsung",
        "google pixel 6",
        "pixel 6 google",
        "sony xperia",
        "xperia sony ultra",
        "nokia brick phone",
    ]
    clusters = ["i12", "i12", "i13", "s21", "s21", "p6", "p6", "x", "x", "n"]
    tau = 0.5
    ctx, truth = er_context(ctx_factory, fixture, clusters, project="fj")
    data = ctx.crowd_data(fixture, "phones")
    result = cp.filtered_join(data, tau=tau)

    oracle_pruned = set()
    for i in range(len(fixture)):
        for j in range(i + 1, len(fixture)):
            if oracle_jaccard(fixture[i], fixture[j]) < tau:
                oracle_pruned.add((i + 1, j + 1))  # row ids are 1-based
    got_pruned = {
        (p.left_id, p.right_id) for p in result.pairs if p.source == SOURCE_PRUNED
    }
    assert got_pruned == oracle_pruned
    # surviving pairs were crowdsourced and answered accurately
    for p in result.pairs:
        if p.source == SOURCE_CROWD:
            assert p.verdict == truth[p.pair_fingerprint]


def test_transitive_join_two_items_publishes_one(ctx_factory):
    objects = ["only a", "only b"]
    ctx, _ = er_context(ctx_factory, objects, ["A", "B"])
    data = ctx.crowd_data(objects, "two")
    result = cp.transitive_join(data)
    assert result.published == 1
    assert result.deduced == 0


def test_transitive_join_deduces_cluster_closure(ctx_factory):
    objects = ["a one", "a two", "a three", "b solo"]
    ctx, truth = er_context(ctx_factory, objects, ["A", "A", "A", "B"])
    data = ctx.crowd_data(objects, "items")
    result = cp.transitive_join(data, order="id")
    assert result.verdict_map() == {
        (l, r): truth[pair_fingerprint(objects[l - 1], objects[r - 1])]
        for l in range(1, 5)
        for r in range(l + 1, 5)
    }
    # {a1,a2,a3},{b}: asked (1,2)M (1,3)M (1,4)N; (2,3) (2,4) (3,4) deduced
    assert result.published == 3
    assert result.deduced == 3
    assert not result.inconsistencies


def test_transitive_join_all_distinct_publishes_all(ctx_factory):
    objects = ["w1", "w2", "w3", "w4"]
    ctx, _ = er_context(ctx_factory, objects, ["A", "B", "C", "D"])
    data = ctx.crowd_data(objects, "items")
    result = cp.transitive_join(data, order="id")
    assert result.published == 6
    assert result.deduced == 0


def test_transitive_join_matches_all_pairs_oracle_in_fresh_store(ctx_factory):
    objects = [f"item {c} {i}" for c in "ab" for i in range(3)]
    clusters = [c for c in "ab" for _ in range(3)]

    ctx1, truth = er_context(ctx_factory, objects, clusters, project="tj")
    data1 = ctx1.crowd_data(objects, "items")
    transitive = cp.transitive_join(data1)

    ctx2, _ = er_context(ctx_factory, objects, clusters, project="oracle")
    data2 = ctx2.crowd_data(objects, "items")
    baseline = cp.simple_join(data2)

    assert transitive.verdict_map() == baseline.verdict_map()
    assert transitive.published < baseline.published


def test_order_pairs_policies():
    objects = {1: "a b", 2: "a b c", 3: "z"}
    pairs = [(1, 2), (1, 3), (2, 3)]
    by_sim = order_pairs(pairs, objects, "similarity", cp.token_jaccard)
    assert by_sim[0] == (1, 2)  # highest similarity first
    assert by_sim[-1] != (1, 2)
    assert order_pairs(pairs, objects, "id", cp.token_jaccard) == sorted(pairs)
    assert order_pairs(pairs, objects, lambda ps: ps[::-1], cp.token_jaccard) == pairs[::-1]
    with pytest.raises(cp.UsageError):
        order_pairs(pairs, objects, "vibes", cp.token_jaccard)


def test_match_graph_deduction_and_violations():
    g = _MatchGraph()
    g.add_match(1, 2)
    g.add_nonmatch(2, 3)
    assert g.deduce(1, 2) == MATCH
    assert g.deduce(1, 3) == NONMATCH  # via component {1,2} vs {3}
    assert g.deduce(1, 4) is None
    assert g.violations() == []
    # a later crowd match joining the negative edge's endpoints is a violation
    g.add_match(3, 1)
    assert g.violations() == [(2, 3)]


def test_deduced_pairs_have_fingerprints_and_sources(ctx_factory):
    objects = ["c one", "c two", "c three"]
    ctx, _ = er_context(ctx_factory, objects, ["C", "C", "C"])
    data = ctx.crowd_data(objects, "items")
    result = cp.transitive_join(data, order="id")
    sources = {(p.left_id, p.right_id): p.source for p in result.pairs}
    assert sources[(1, 2)] == SOURCE_CROWD
    assert sources[(2, 3)] == SOURCE_DEDUCED
    for p in result.pairs:
        assert cp.canonical_json(p.pair_fingerprint)  # well-formed
        assert p.pair_fingerprint == pair_fingerprint(
            objects[p.left_id - 1], objects[p.right_id - 1]
        )
