import itertools

import numpy as np
import pytest

from teags.grids import SimilarityGrid
from teags.ingest import AlarmEvent
from teags.slabs import SlabPartition


def make_events(rows):
    """rows: (node, category, timestamp, text) tuples; ids auto-assigned."""
    return [
        AlarmEvent(f"a{k}", node, cat, ts, text)
        for k, (node, cat, ts, text) in enumerate(rows)
    ]


def random_similarity_grid(rng: np.random.Generator, size: int) -> SimilarityGrid:
    m = rng.uniform(0.0, 1.0, size=(size, size))
    m = (m + m.T) / 2.0
    np.fill_diagonal(m, 1.0)
    return SimilarityGrid("hour", "textual", m)


def singleton_partitions(kinds_counts=(("hour", 24), ("day", 7), ("week", 5), ("month", 12))):
    return [
        SlabPartition(kind, "small", 0.0, tuple(range(n))) for kind, n in kinds_counts
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def reference_cut(nodes, edges):
    """Line-by-line transliteration of the greedy heap-cut pseudocode.

    Keeps an explicitly re-sorted edge list as the "heap" (weight descending,
    lexicographic pair ascending), pops the head while uncovered nodes
    remain, and applies the accept-if-either-endpoint-uncovered rule.
    """
    n_prime: list[str] = []
    e_prime: list[tuple[str, str, float]] = []
    n_rest = set(nodes)
    heap = sorted(edges, key=lambda e: (-e[2], e[0], e[1]))
    while n_rest and heap:
        u, v, w = heap.pop(0)
        heap.sort(key=lambda e: (-e[2], e[0], e[1]))
        if u in n_rest or v in n_rest:
            e_prime.append((u, v, w))
            n_rest.discard(u)
            n_rest.discard(v)
        for x in (u, v):
            if (u, v, w) in e_prime and x not in n_prime:
                n_prime.append(x)
    comp = {n: {n} for n in nodes}
    for u, v, _ in e_prime:
        merged = comp[u] | comp[v]
        for n in merged:
            comp[n] = merged
    seen, groups = set(), []
    for n in sorted(nodes):
        if n not in seen:
            groups.append(sorted(comp[n]))
            seen |= comp[n]
    return sorted(groups), sorted(e_prime)


def random_network(rng: np.random.Generator, max_nodes: int = 8):
    n = int(rng.integers(2, max_nodes + 1))
    nodes = [f"v{i}" for i in range(n)]
    edges = []
    for u, v in itertools.combinations(nodes, 2):
        if rng.random() < 0.6:
            w = float(np.round(rng.uniform(0.0, 1.0), 3))
            edges.append((u, v, w))
    return nodes, edges
