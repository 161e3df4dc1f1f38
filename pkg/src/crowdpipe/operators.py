"""Crowdsourced join operators, built on the core publish/get/quality
primitives so they inherit caching, crash recovery, and lineage for free.

Three variants over entity pairs:
  simple     — ask the crowd about every pair,
  filtered   — prune pairs below a machine-similarity threshold first,
  transitive — deduce verdicts from already-known edges (A=B and B=C imply
               A=C; A=B and B≠C imply A≠C) and only publish the rest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .canonical import canonical_json, fingerprint
from .core import CrowdData
from .errors import InvalidPresenter, InvalidThreshold, UsageError
from .presenter import Presenter, pair_match_presenter
from .quality import aggregate_one

logger = logging.getLogger(__name__)

MATCH = "match"
NONMATCH = "nonmatch"

SOURCE_CROWD = "crowd"
SOURCE_DEDUCED = "deduced"
SOURCE_PRUNED = "pruned"


@dataclass(frozen=True)
class PairTask:
    left_id: int
    right_id: int
    pair_fingerprint: str
    verdict: str | None
    source: str


@dataclass
class JoinResult:
    pairs: list[PairTask] = field(default_factory=list)
    published: int = 0
    deduced: int = 0
    pruned: int = 0
    inconsistencies: list[dict] = field(default_factory=list)

    @property
    def matches(self) -> list[PairTask]:
        return [p for p in self.pairs if p.verdict == MATCH]

    def verdict_map(self) -> dict[tuple[int, int], str]:
        return {(p.left_id, p.right_id): p.verdict for p in self.pairs}


def pair_object(left: Any, right: Any) -> dict:
    return {"left": left, "right": right}


def pair_fingerprint(left: Any, right: Any) -> str:
    return fingerprint(pair_object(left, right))


def record_text(obj: Any) -> str:
    """Flatten a record to text for similarity: dict values in key order."""
    if isinstance(obj, str):
        return obj
    if isinstance(obj, dict):
        return " ".join(str(obj[k]) for k in sorted(obj))
    return canonical_json(obj)


def token_jaccard(left: Any, right: Any) -> float:
    """Jaccard over lowercase whitespace-delimited tokens (default matcher)."""
    a = set(record_text(left).lower().split())
    b = set(record_text(right).lower().split())
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def build_pair_truth(
    objects: Sequence[Any], clusters: Sequence[Any]
) -> dict[str, str]:
    """Ground-truth labels for all C(n,2) pairs from planted cluster labels."""
    if len(objects) != len(clusters):
        raise ValueError("objects and clusters must align")
    truth = {}
    for i in range(len(objects)):
        for j in range(i + 1, len(objects)):
            verdict = MATCH if clusters[i] == clusters[j] else NONMATCH
            truth[pair_fingerprint(objects[i], objects[j])] = verdict
    return truth


def _check_presenter(presenter: Presenter) -> None:
    if set(presenter.schema.labels) != {MATCH, NONMATCH}:
        raise InvalidPresenter(
            "join presenter must have exactly the labels {match, nonmatch}"
        )


def _self_pairs(cd: CrowdData) -> list[tuple[int, int]]:
    ids = [row.id for row in cd.rows]
    return [(ids[i], ids[j]) for i in range(len(ids)) for j in range(i + 1, len(ids))]


def _run_pair_table(
    cd: CrowdData,
    table_name: str,
    pair_ids: list[tuple[int, int]],
    objects_by_id: dict[int, Any],
    presenter: Presenter,
) -> list[PairTask]:
    """Publish the given pairs as one table, collect answers, majority-vote."""
    pair_objs = [
        pair_object(objects_by_id[l], objects_by_id[r]) for l, r in pair_ids
    ]
    table = cd.ctx.crowd_data(pair_objs, table_name)
    table.set_presenter(presenter)
    table.publish_task()
    table.get_result(blocking=True)
    out = []
    for (l, r), row in zip(pair_ids, table.rows):
        verdict = aggregate_one(row.result.labels()).label
        out.append(
            PairTask(
                left_id=l,
                right_id=r,
                pair_fingerprint=row.fingerprint,
                verdict=verdict,
                source=SOURCE_CROWD,
            )
        )
    return out


def simple_join(
    cd_left: CrowdData,
    cd_right: CrowdData | None = None,
    presenter: Presenter | None = None,
    table_name: str | None = None,
) -> JoinResult:
    """Ask the crowd about every pair: the cross product, or C(n,2) for a
    self-join. The baseline the other variants are measured against."""
    presenter = presenter or pair_match_presenter()
    _check_presenter(presenter)
    objects_by_id = {row.id: row.object for row in cd_left.rows}
    if cd_right is None:
        pair_ids = _self_pairs(cd_left)
        table_name = table_name or f"{cd_left.table_name}-sjoin"
    else:
        for row in cd_right.rows:
            objects_by_id.setdefault(-row.id, row.object)
        pair_ids = [
            (lrow.id, -rrow.id) for lrow in cd_left.rows for rrow in cd_right.rows
        ]
        table_name = table_name or f"{cd_left.table_name}-sjoin-{cd_right.table_name}"
    pairs = _run_pair_table(cd_left, table_name, pair_ids, objects_by_id, presenter)
    return JoinResult(pairs=pairs, published=len(pairs))


def filtered_join(
    cd: CrowdData,
    similarity: Callable[[Any, Any], float] | None = None,
    tau: float = 0.5,
    presenter: Presenter | None = None,
    table_name: str | None = None,
) -> JoinResult:
    """Prune pairs whose machine similarity falls below tau (they become
    nonmatch without ever being published), crowdsource the rest."""
    if not 0.0 <= tau <= 1.0:
        raise InvalidThreshold(f"tau must be in [0, 1], got {tau}")
    presenter = presenter or pair_match_presenter()
    _check_presenter(presenter)
    similarity = similarity or token_jaccard
    objects_by_id = {row.id: row.object for row in cd.rows}

    survivors: list[tuple[int, int]] = []
    pruned: list[PairTask] = []
    for l, r in _self_pairs(cd):
        if similarity(objects_by_id[l], objects_by_id[r]) < tau:
            pruned.append(
                PairTask(
                    left_id=l,
                    right_id=r,
                    pair_fingerprint=pair_fingerprint(objects_by_id[l], objects_by_id[r]),
                    verdict=NONMATCH,
                    source=SOURCE_PRUNED,
                )
            )
        else:
            survivors.append((l, r))

    crowd_pairs: list[PairTask] = []
    if survivors:
        crowd_pairs = _run_pair_table(
            cd,
            table_name or f"{cd.table_name}-fjoin",
            survivors,
            objects_by_id,
            presenter,
        )
    result = JoinResult(
        pairs=crowd_pairs + pruned,
        published=len(crowd_pairs),
        pruned=len(pruned),
    )
    result.pairs.sort(key=lambda p: (p.left_id, p.right_id))
    return result


class _UnionFind:
    def __init__(self):
        self.parent: dict[int, int] = {}

    def find(self, x: int) -> int:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


class _MatchGraph:
    """Positive edges as union-find components, negative edges as id pairs."""

    def __init__(self):
        self.uf = _UnionFind()
        self.negatives: list[tuple[int, int]] = []

    def add_match(self, a: int, b: int) -> None:
        self.uf.union(a, b)

    def add_nonmatch(self, a: int, b: int) -> None:
        self.negatives.append((a, b))

    def deduce(self, a: int, b: int) -> str | None:
        ra, rb = self.uf.find(a), self.uf.find(b)
        if ra == rb:
            return MATCH
        for u, v in self.negatives:
            if {self.uf.find(u), self.uf.find(v)} == {ra, rb}:
                return NONMATCH
        return None

    def violations(self) -> list[tuple[int, int]]:
        """Negative edges whose endpoints ended up in one component."""
        return [
            (u, v) for u, v in self.negatives if self.uf.find(u) == self.uf.find(v)
        ]


def order_pairs(
    pair_ids: list[tuple[int, int]],
    objects_by_id: dict[int, Any],
    order: str | Callable,
    similarity: Callable[[Any, Any], float],
) -> list[tuple[int, int]]:
    """Pair ordering policy: 'similarity' (descending, the default — likely
    matches first maximizes deduction), 'id', or a custom sort callable."""
    if callable(order):
        return order(list(pair_ids))
    if order == "id":
        return sorted(pair_ids)
    if order == "similarity":
        return sorted(
            pair_ids,
            key=lambda p: (
                -similarity(objects_by_id[p[0]], objects_by_id[p[1]]),
                p[0],
                p[1],
            ),
        )
    raise UsageError(f"unknown pair ordering policy {order!r}")


def transitive_join(
    cd: CrowdData,
    order: str | Callable = "similarity",
    similarity: Callable[[Any, Any], float] | None = None,
    presenter: Presenter | None = None,
    table_name: str | None = None,
) -> JoinResult:
    """Self-join that deduces what it can and asks the crowd about the rest.

    Pairs are visited in the given order; a pair connected by a positive path
    is a match, a pair whose components are joined by a negative edge is a
    nonmatch, anything else is published. Crowd answers outrank deductions:
    if they violate closure the conflict is reported and deduced verdicts are
    recomputed from the final graph.
    """
    presenter = presenter or pair_match_presenter()
    _check_presenter(presenter)
    similarity = similarity or token_jaccard
    objects_by_id = {row.id: row.object for row in cd.rows}
    ordered = order_pairs(_self_pairs(cd), objects_by_id, order, similarity)

    table = cd.ctx.crowd_data([], table_name or f"{cd.table_name}-tjoin")
    table.set_presenter(presenter)

    graph = _MatchGraph()
    decisions: list[tuple[tuple[int, int], str, str, str]] = []  # (pair, fp, verdict, source)
    for l, r in ordered:
        deduced = graph.deduce(l, r)
        if deduced is not None:
            decisions.append(
                ((l, r), pair_fingerprint(objects_by_id[l], objects_by_id[r]), deduced, SOURCE_DEDUCED)
            )
            continue
        table.append(pair_object(objects_by_id[l], objects_by_id[r]))
        table.publish_task()
        table.get_result(blocking=True)
        row = table.rows[-1]
        verdict = aggregate_one(row.result.labels()).label
        if verdict == MATCH:
            graph.add_match(l, r)
        else:
            graph.add_nonmatch(l, r)
        decisions.append(((l, r), row.fingerprint, verdict, SOURCE_CROWD))

    inconsistencies = [
        {"negative_edge": [u, v], "detail": "positive path joins a negative edge"}
        for u, v in graph.violations()
    ]
    for item in inconsistencies:
        logger.warning(
            "inconsistent crowd answers: %s (crowd edges win, deductions recomputed)",
            item["negative_edge"],
        )

    pairs = []
    published = deduced_count = 0
    for (l, r), fp, verdict, source in decisions:
        if source == SOURCE_DEDUCED:
            # recompute from the final graph: crowd edges win over deductions
            final = graph.deduce(l, r)
            verdict = final if final is not None else NONMATCH
            deduced_count += 1
        else:
            published += 1
        pairs.append(PairTask(l, r, fp, verdict, source))
    pairs.sort(key=lambda p: (p.left_id, p.right_id))
    return JoinResult(
        pairs=pairs,
        published=published,
        deduced=deduced_count,
        inconsistencies=inconsistencies,
    )
