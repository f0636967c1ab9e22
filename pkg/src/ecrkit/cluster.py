"""Merge scored mention pairs into system clusters.

Clustering is a greedy union-find over pairwise edges: edges at or above
the decision threshold are processed in descending score order (ties broken
by ascending pair id) and each edge merges the clusters currently holding
its endpoints. Mentions that never merge stay singletons, so the output is
always a full partition of the mention universe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .errors import CorpusIntegrityError

DEFAULT_THRESHOLD = 0.5


class ScoredEdge(NamedTuple):
    """A scored mention pair, reduced to what clustering needs."""

    pair_id: str
    first: str
    second: str
    score: float


@dataclass(frozen=True)
class ClusterSet:
    """A partition of mention ids into disjoint clusters.

    Every id in ``universe`` belongs to exactly one cluster; ids not placed
    explicitly are materialized as singletons.
    """

    clusters: tuple[frozenset[str], ...]
    universe: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        seen: set[str] = set()
        for cluster in self.clusters:
            if not cluster:
                raise ValueError("empty cluster not allowed")
            overlap = seen & cluster
            if overlap:
                raise ValueError(f"clusters overlap on {sorted(overlap)}")
            seen |= cluster
        if not self.universe:
            object.__setattr__(self, "universe", frozenset(seen))
        elif seen != self.universe:
            extra = seen - self.universe
            if extra:
                raise ValueError(f"cluster members outside universe: {sorted(extra)}")
            missing = self.universe - seen
            clusters = self.clusters + tuple(frozenset({m}) for m in sorted(missing))
            object.__setattr__(self, "clusters", clusters)

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[str]],
                      universe: Iterable[str] | None = None) -> "ClusterSet":
        return cls(
            clusters=tuple(frozenset(c) for c in clusters if c),
            universe=frozenset(universe) if universe is not None else frozenset(),
        )

    def cluster_of(self, mention_id: str) -> frozenset[str]:
        for cluster in self.clusters:
            if mention_id in cluster:
                return cluster
        raise KeyError(mention_id)

    def as_lists(self) -> list[list[str]]:
        """Canonical nested-list form: members sorted, clusters sorted by head."""
        return sorted((sorted(c) for c in self.clusters), key=lambda c: c[0])

    def to_json(self) -> str:
        return json.dumps({"clusters": self.as_lists()}, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ClusterSet":
        data = json.loads(text)
        return cls.from_clusters(data["clusters"])


class _UnionFind:
    def __init__(self, members: Iterable[str]):
        self.parent = {m: m for m in members}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic representative keeps output order stable
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb

    def partition(self) -> list[frozenset[str]]:
        groups: dict[str, set[str]] = {}
        for m in self.parent:
            groups.setdefault(self.find(m), set()).add(m)
        return [frozenset(g) for g in groups.values()]


def greedy_merge(scored: Iterable[ScoredEdge], threshold: float,
                 universe: Iterable[str]) -> ClusterSet:
    """Cluster mentions by greedily merging edges with score >= threshold.

    Args:
        scored: scored mention-pair edges; endpoints must lie in ``universe``.
        threshold: decision threshold in [0, 1].
        universe: all mention ids that must appear in the output partition.

    Returns:
        A ClusterSet partitioning the universe, singletons included.

    Raises:
        CorpusIntegrityError: if an edge references an id outside the universe.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    members = frozenset(universe)
    all_edges = list(scored)
    for edge in all_edges:
        outside = [m for m in (edge.first, edge.second) if m not in members]
        if outside:
            raise CorpusIntegrityError(
                f"edge {edge.pair_id} references mentions outside the universe",
                outside,
            )
    uf = _UnionFind(members)
    edges = sorted(
        (e for e in all_edges if e.score >= threshold),
        key=lambda e: (-e.score, e.pair_id),
    )
    for edge in edges:
        uf.union(edge.first, edge.second)
    return ClusterSet(tuple(uf.partition()), members)


def cluster_within_topics(scored_by_topic: Mapping[str, Iterable[ScoredEdge]],
                          threshold: float,
                          universe_by_topic: Mapping[str, Iterable[str]]) -> ClusterSet:
    """Run greedy_merge per topic and take the union of the partitions.

    An edge whose endpoints are not both inside its topic's universe is a
    scope violation and is rejected, as is an edge group under a topic that
    has no universe.
    """
    unknown = set(scored_by_topic) - set(universe_by_topic)
    if unknown:
        raise CorpusIntegrityError("edges reference unknown topics", sorted(unknown))
    clusters: list[frozenset[str]] = []
    universe: set[str] = set()
    for topic in sorted(universe_by_topic):
        topic_universe = frozenset(universe_by_topic[topic])
        edges = list(scored_by_topic.get(topic, ()))
        part = greedy_merge(edges, threshold, topic_universe)
        clusters.extend(part.clusters)
        universe |= topic_universe
    return ClusterSet(tuple(clusters), frozenset(universe))
