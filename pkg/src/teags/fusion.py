"""Coherence fusion, the bilateral network, and max-heap graph cutting.

The three channel weights per node pair (semantic, time-aware semantic,
time-only) are mixed into one coherence score; scored pairs above a floor
become the edges of a simple undirected graph, from which a greedy max-heap
cut extracts a forest whose connected components are the output subgraphs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable

__all__ = [
    "coherence",
    "tune_coefficients",
    "EdgeWeights",
    "BilateralNetwork",
    "SubgraphSet",
    "max_heap_graph_cut",
]

Pair = tuple[str, str]


def coherence(
    w_owe: float, w_twe: float, w_mgm: float, lam: float, beta: float
) -> float:
    """Convex mixture (1-lam-beta)*twe + lam*owe + beta*mgm."""
    if lam < 0 or beta < 0 or lam + beta > 1.0 + 1e-12:
        raise ValueError("need lam >= 0, beta >= 0, lam + beta <= 1")
    return (1.0 - lam - beta) * w_twe + lam * w_owe + beta * w_mgm


def tune_coefficients(
    evaluate: Callable[[float, float], float], step: float
) -> tuple[float, float]:
    """Exhaustive grid search over mixture coefficients.

    ``evaluate(lam, beta)`` must return the validation F-measure. The grid is
    {0, step, 2*step, ...}^2 restricted to lam + beta <= 1; ties prefer the
    smallest lam, then the smallest beta.
    """
    if step <= 0 or step > 1:
        raise ValueError("step must lie in (0, 1]")
    values: list[float] = []
    v = 0.0
    while v <= 1.0 + 1e-12:
        values.append(round(v, 12))
        v += step
    grid = [(lam, beta) for lam in values for beta in values if lam + beta <= 1.0 + 1e-12]
    if not grid:
        raise ValueError("empty coefficient grid")
    best: tuple[float, float] | None = None
    best_f = -1.0
    for lam, beta in grid:
        f = evaluate(lam, beta)
        if f > best_f:
            best_f = f
            best = (lam, beta)
    assert best is not None
    return best


@dataclass
class EdgeWeights:
    """Per-pair channel weights and their fused coherence score."""

    records: dict[Pair, tuple[float, float, float, float]] = field(default_factory=dict)

    @classmethod
    def fuse(
        cls,
        owe: dict[Pair, float],
        twe: dict[Pair, float],
        mgm: dict[Pair, float],
        lam: float,
        beta: float,
    ) -> "EdgeWeights":
        out = cls()
        for pair in sorted(set(owe) | set(twe) | set(mgm)):
            u, v = pair
            if u == v:
                continue
            o = owe.get(pair, 0.0)
            t = twe.get(pair, 0.0)
            m = mgm.get(pair, 0.0)
            out.records[pair] = (o, t, m, coherence(o, t, m, lam, beta))
        return out


@dataclass
class BilateralNetwork:
    """Simple undirected graph weighted by the coherence score."""

    nodes: list[str]
    edges: dict[Pair, float]

    @classmethod
    def from_weights(
        cls,
        weights: EdgeWeights,
        nodes: Iterable[str],
        edge_floor: float = 0.05,
    ) -> "BilateralNetwork":
        edges = {
            pair: rec[3]
            for pair, rec in weights.records.items()
            if rec[3] >= edge_floor and pair[0] != pair[1]
        }
        node_set = set(nodes)
        for (u, v) in edges:
            node_set.add(u)
            node_set.add(v)
        return cls(sorted(node_set), edges)


@dataclass
class SubgraphSet:
    """Connected components of the cut graph plus the retained edges."""

    subgraphs: list[list[str]]
    edges: list[tuple[str, str, float]]

    def membership(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for k, sg in enumerate(self.subgraphs):
            for n in sg:
                out[n] = k
        return out

    def neighbors(self) -> dict[str, set[str]]:
        groups = self.membership()
        members: dict[int, set[str]] = {}
        for n, g in groups.items():
            members.setdefault(g, set()).add(n)
        return {n: members[g] - {n} for n, g in groups.items()}


def max_heap_graph_cut(network: BilateralNetwork) -> SubgraphSet:
    """Greedy heap-ordered edge selection.

    All edges enter a max-heap keyed by weight (ties broken by the
    lexicographic node pair). The heaviest edge is accepted whenever at
    least one endpoint is still uncovered; accepting covers both endpoints.
    The loop ends when every node is covered or the heap empties; nodes
    never covered become singleton subgraphs. Accepted edges always touch a
    previously uncovered endpoint, so the result is a forest.
    """
    heap = [(-w, u, v) for (u, v), w in network.edges.items()]
    heapq.heapify(heap)
    uncovered = set(network.nodes)
    covered: list[str] = []
    covered_set: set[str] = set()
    accepted: list[tuple[str, str, float]] = []

    while uncovered and heap:
        neg_w, u, v = heapq.heappop(heap)
        if u in uncovered or v in uncovered:
            accepted.append((u, v, -neg_w))
            uncovered.discard(u)
            uncovered.discard(v)
            for n in (u, v):
                if n not in covered_set:
                    covered_set.add(n)
                    covered.append(n)

    parent: dict[str, str] = {n: n for n in network.nodes}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (u, v, _) in accepted:
        parent[find(u)] = find(v)

    groups: dict[str, list[str]] = {}
    for n in network.nodes:
        groups.setdefault(find(n), []).append(n)
    subgraphs = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
    return SubgraphSet(subgraphs, accepted)
