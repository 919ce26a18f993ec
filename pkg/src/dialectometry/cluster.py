"""Dialect grouping: average-linkage agglomeration, two-medoid partitioning, silhouettes.

All tie-breaking follows the lexicographic order of site ids, so results do
not depend on the row order of the input matrix.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .matrixlab import DistanceMatrix


class ClusterError(ValueError):
    pass


class ClusterWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ClusterNode:
    """A node of a binary dialect tree.

    ``members`` is sorted; ``children`` is empty or holds two nodes whose
    members partition this node's.  ``height`` is the merge distance for
    agglomerative trees and the split objective for partition trees.
    """

    members: tuple[str, ...]
    children: tuple["ClusterNode", ...] = ()
    height: float = 0.0
    medoids: tuple[str, str] | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __len__(self) -> int:
        return len(self.members)

    def node_at(self, path: Sequence[int]) -> "ClusterNode":
        node = self
        for step in path:
            if node.is_leaf:
                raise ClusterError(f"path {list(path)} descends below a leaf")
            node = node.children[step]
        return node

    def walk(self) -> Iterable["ClusterNode"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def topology(self) -> frozenset:
        """The set of member groups of all nodes; ignores heights."""
        return frozenset(frozenset(node.members) for node in self.walk())

    def to_dict(self) -> dict:
        out: dict = {"members": list(self.members), "height": self.height}
        if self.medoids is not None:
            out["medoids"] = list(self.medoids)
        out["children"] = [c.to_dict() for c in self.children]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ClusterNode":
        try:
            children = tuple(cls.from_dict(c) for c in data.get("children", []))
            medoids = data.get("medoids")
            node = cls(
                members=tuple(sorted(data["members"])),
                children=children,
                height=float(data["height"]),
                medoids=tuple(medoids) if medoids is not None else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ClusterError(f"malformed tree: {exc}") from None
        if len(children) not in (0, 2):
            raise ClusterError("tree nodes must have zero or two children")
        if children:
            joined = sorted(children[0].members + children[1].members)
            if joined != list(node.members):
                raise ClusterError("children do not partition their parent")
        return node

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"


def tree_from_json(text: str) -> ClusterNode:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ClusterError(f"invalid tree JSON: {exc}") from None
    return ClusterNode.from_dict(data)


def _node(members: Iterable[str], children=(), height=0.0, medoids=None) -> ClusterNode:
    children = tuple(sorted(children, key=lambda c: c.members))
    return ClusterNode(tuple(sorted(members)), children, float(height), medoids)


def _sorted_view(m: DistanceMatrix, members: Iterable[str] | None = None):
    ids = sorted(m.site_ids if members is None else members)
    idx = [m.index(s) for s in ids]
    return ids, m.cells[np.ix_(idx, idx)]


def average_linkage(m: DistanceMatrix, g1: Iterable[str], g2: Iterable[str]) -> float:
    """Mean distance over all cross pairs of two site groups."""
    a = [m.index(s) for s in g1]
    b = [m.index(s) for s in g2]
    return float(m.cells[np.ix_(a, b)].mean())


def agglomerate(m: DistanceMatrix) -> ClusterNode:
    """Average-linkage agglomerative clustering; returns the root of the full dendrogram.

    Cross-cluster distance sums are updated incrementally on each merge, giving
    O(N^3) total work.  Among equally close cluster pairs the lexicographically
    smallest (by sorted member ids) merges first.
    """
    ids, d = _sorted_view(m)
    n = len(ids)
    if n < 2:
        raise ClusterError("agglomeration needs at least two sites")
    sums = d.copy()
    sizes = np.ones(n)
    keys: list[tuple[int, ...]] = [(i,) for i in range(n)]
    nodes: list[ClusterNode | None] = [_node([s]) for s in ids]
    active = list(range(n))

    while len(active) > 1:
        act = np.array(active)
        avg = sums[np.ix_(act, act)] / np.outer(sizes[act], sizes[act])
        iu = np.triu_indices(len(act), k=1)
        vals = avg[iu]
        best = vals.min()
        candidates = [
            (min(keys[act[r]], keys[act[c]]), max(keys[act[r]], keys[act[c]]), act[r], act[c])
            for r, c in zip(iu[0][vals == best], iu[1][vals == best])
        ]
        _, _, a, b = min(candidates)
        merged = _node(
            nodes[a].members + nodes[b].members, (nodes[a], nodes[b]), height=best
        )
        sums[a, :] += sums[b, :]
        sums[:, a] += sums[:, b]
        sizes[a] += sizes[b]
        keys[a] = tuple(sorted(keys[a] + keys[b]))
        nodes[a] = merged
        nodes[b] = None
        active.remove(b)
    return nodes[active[0]]


def cut_top(tree: ClusterNode) -> tuple[frozenset[str], frozenset[str]]:
    """Member sets of the root's two children."""
    if tree.is_leaf:
        raise ClusterError("cannot cut a tree whose root is a leaf")
    return frozenset(tree.children[0].members), frozenset(tree.children[1].members)


@dataclass(frozen=True)
class MedoidSplit:
    """Two groups, each listed with its medoid at the same position."""

    groups: tuple[tuple[str, ...], tuple[str, ...]]
    medoids: tuple[str, str]
    objective: float


def partition_medoids(m: DistanceMatrix, members: Iterable[str] | None = None) -> MedoidSplit:
    """Best split of *members* around two medoids, by exhaustive search over medoid pairs.

    Every site joins its nearer medoid (the lexicographically smaller medoid
    on a tie).  The objective is the mean distance from each member to its
    medoid; the pair with the smallest objective wins, the lexicographically
    smallest pair on a tie.
    """
    ids, d = _sorted_view(m, members)
    n = len(ids)
    if n < 2:
        raise ClusterError("partitioning needs at least two sites")

    best_cost = math.inf
    best_pair = (0, 1)
    for a in range(n - 1):
        # costs[k] = total distance to the nearer of medoids a and a+1+k
        costs = np.minimum(d[:, a : a + 1], d[:, a + 1 :]).sum(axis=0)
        k = int(np.argmin(costs))
        if costs[k] < best_cost:
            best_cost = float(costs[k])
            best_pair = (a, a + 1 + k)

    a, b = best_pair
    to_a = d[:, a] <= d[:, b]
    to_a[a] = True
    to_a[b] = False
    group_a = tuple(s for s, flag in zip(ids, to_a) if flag)
    group_b = tuple(s for s, flag in zip(ids, to_a) if not flag)
    return MedoidSplit((group_a, group_b), (ids[a], ids[b]), best_cost / n)


def recursive_partition(
    m: DistanceMatrix, min_size: int = 2, max_depth: int | None = None
) -> ClusterNode:
    """Top-down dialect tree from repeated two-medoid splits.

    A group is split only while it has at least ``2 * min_size`` sites and lies
    above ``max_depth``; otherwise it becomes a leaf.
    """
    if min_size < 2:
        raise ClusterError("min_size must be at least 2")
    if len(m) < 2:
        raise ClusterError("partitioning needs at least two sites")
    if len(m) < 2 * min_size or max_depth == 0:
        warnings.warn(
            f"{len(m)} sites cannot be split with min_size={min_size}, max_depth={max_depth}; "
            "returning an undivided root",
            ClusterWarning,
            stacklevel=2,
        )
        return _node(m.site_ids)

    def build(members: tuple[str, ...], depth: int) -> ClusterNode:
        if len(members) < 2 * min_size or (max_depth is not None and depth >= max_depth):
            return _node(members)
        split = partition_medoids(m, members)
        children = [build(g, depth + 1) for g in split.groups]
        return _node(members, children, split.objective, split.medoids)

    return build(tuple(m.site_ids), 0)


@dataclass(frozen=True)
class SilhouetteEntry:
    site: str
    group: int
    a: float
    b: float
    s: float


def silhouette_value(a: float, b: float) -> float:
    if a < b:
        return 1.0 - a / b
    if a > b:
        return b / a - 1.0
    return 0.0


@dataclass(frozen=True)
class SilhouetteReport:
    """Silhouettes of a two-group split.

    ``entries`` lists group 0 then group 1, each sorted by ``s`` descending
    (site id ascending on ties).
    """

    entries: tuple[SilhouetteEntry, ...]
    group_means: tuple[float, float]
    overall_mean: float

    @classmethod
    def from_entries(cls, entries: Iterable[SilhouetteEntry]) -> "SilhouetteReport":
        entries = sorted(entries, key=lambda e: (e.group, -e.s, e.site))
        means = []
        for g in (0, 1):
            values = [e.s for e in entries if e.group == g]
            means.append(math.fsum(values) / len(values) if values else 0.0)
        overall = math.fsum(e.s for e in entries) / len(entries) if entries else 0.0
        return cls(tuple(entries), (means[0], means[1]), overall)

    def group(self, g: int) -> tuple[SilhouetteEntry, ...]:
        return tuple(e for e in self.entries if e.group == g)

    def group_sizes(self) -> tuple[int, int]:
        return len(self.group(0)), len(self.group(1))


def silhouette(m: DistanceMatrix, g1: Iterable[str], g2: Iterable[str]) -> SilhouetteReport:
    """Per-site silhouettes for the split of sites into *g1* and *g2*.

    ``a`` is the mean distance to the rest of the site's own group, ``b`` the
    mean distance to the other group.  Members of a singleton group get s = 0.
    """
    groups = (tuple(sorted(set(g1))), tuple(sorted(set(g2))))
    if not groups[0] or not groups[1]:
        raise ClusterError("silhouette groups must be nonempty")
    overlap = set(groups[0]) & set(groups[1])
    if overlap:
        raise ClusterError(f"groups overlap on {sorted(overlap)}")
    idx = [[m.index(s) for s in g] for g in groups]
    entries = []
    for g, (own, other) in enumerate(((idx[0], idx[1]), (idx[1], idx[0]))):
        for site, i in zip(groups[g], own):
            b = float(m.cells[i, other].mean())
            if len(own) == 1:
                entries.append(SilhouetteEntry(site, g, 0.0, b, 0.0))
                continue
            a = float(m.cells[i, own].sum() / (len(own) - 1))
            entries.append(SilhouetteEntry(site, g, a, b, silhouette_value(a, b)))
    return SilhouetteReport.from_entries(entries)


def mean_silhouette(report: SilhouetteReport) -> float:
    """Mean silhouette over all sites of the report."""
    if not report.entries:
        raise ClusterError("empty silhouette report")
    return math.fsum(e.s for e in report.entries) / len(report.entries)
