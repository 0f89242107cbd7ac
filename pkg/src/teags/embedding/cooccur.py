"""Vocabulary bookkeeping and sliding-window co-occurrence counting.

Counts are collected once per unordered in-window token pair and stored
canonically (i <= j); the symmetric count X_ij = X_ji is implied. Slab-scoped
matrices attribute an event's pairs to the slab containing the event's
timestamp, one matrix per (facet, slab), so a facet's slab matrices partition
the global pair mass.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..ingest import AlarmEvent, tokenize
from ..slabs import SlabPartition, multifacet_slab_of

__all__ = ["Vocabulary", "CooccurrenceMatrix", "build_cooccurrence", "SlabCooccurrences"]


class Vocabulary:
    """Word <-> dense id map with global, per-facet, and per-slab counts."""

    def __init__(self) -> None:
        self.words: list[str] = []
        self.index: dict[str, int] = {}
        self.counts: list[int] = []
        # facet kind -> slab id -> word id -> count
        self.slab_counts: dict[str, dict[int, Counter]] = {}

    def __len__(self) -> int:
        return len(self.words)

    def add(self, word: str) -> int:
        wid = self.index.get(word)
        if wid is None:
            wid = len(self.words)
            self.index[word] = wid
            self.words.append(word)
            self.counts.append(0)
        return wid

    def observe(self, wid: int, slab_of: dict[str, int] | None = None) -> None:
        self.counts[wid] += 1
        if slab_of:
            for kind, slab in slab_of.items():
                self.slab_counts.setdefault(kind, {}).setdefault(slab, Counter())[wid] += 1

    def slab_count(self, wid: int, kind: str, slab: int) -> int:
        return self.slab_counts.get(kind, {}).get(slab, Counter()).get(wid, 0)

    def facet_count(self, wid: int, kind: str) -> int:
        return sum(c.get(wid, 0) for c in self.slab_counts.get(kind, {}).values())


@dataclass
class CooccurrenceMatrix:
    """Sparse symmetric co-occurrence counts for one scope."""

    scope: str | tuple[str, int]
    window_size: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)
    symmetric: bool = True

    def bump(self, a: int, b: int, amount: int = 1) -> None:
        key = (a, b) if a <= b else (b, a)
        self.entries[key] = self.entries.get(key, 0) + amount

    def get(self, a: int, b: int) -> int:
        key = (a, b) if a <= b else (b, a)
        return self.entries.get(key, 0)

    def max_count(self) -> int:
        return max(self.entries.values()) if self.entries else 0

    def total(self) -> int:
        return sum(self.entries.values())

    def row_sum(self, wid: int) -> int:
        # X_ii contributes once to its own row, matching the stored-once convention.
        return sum(c for (a, b), c in self.entries.items() if a == wid or b == wid)

    def __len__(self) -> int:
        return len(self.entries)


def _count_windows(matrix: CooccurrenceMatrix, ids: Sequence[int], window: int) -> None:
    for a in range(len(ids)):
        for b in range(a + 1, min(a + window + 1, len(ids))):
            matrix.bump(ids[a], ids[b])


def build_cooccurrence(
    token_docs: Iterable[Sequence[str]], window_size: int, vocab: Vocabulary | None = None
) -> tuple[CooccurrenceMatrix, Vocabulary]:
    """Global window counts over a corpus of token sequences."""
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    vocab = vocab or Vocabulary()
    matrix = CooccurrenceMatrix("global", window_size)
    for doc in token_docs:
        ids = [vocab.add(t) for t in doc]
        for wid in ids:
            vocab.observe(wid)
        _count_windows(matrix, ids, window_size)
    return matrix, vocab


class SlabCooccurrences:
    """Global plus slab-scoped co-occurrence evidence for one event corpus.

    ``joint`` maps each canonical pair to its co-occurrence counts by
    multifacet slab tuple (one component per active facet, in hierarchy
    order), from which every per-facet conditional can be derived.
    """

    def __init__(self, partitions: Sequence[SlabPartition], window_size: int):
        if window_size < 1:
            raise ValueError("window_size must be >= 1")
        self.partitions = list(partitions)
        self.facet_order = tuple(p.facet_kind for p in self.partitions)
        self.window_size = window_size
        self.vocab = Vocabulary()
        self.global_matrix = CooccurrenceMatrix("global", window_size)
        self.slab_matrices: dict[tuple[str, int], CooccurrenceMatrix] = {}
        self.joint: dict[tuple[int, int], Counter] = {}

    def slab_count_of(self, kind: str) -> int:
        for p in self.partitions:
            if p.facet_kind == kind:
                return p.slab_count
        raise KeyError(kind)

    def matrix_for(self, kind: str, slab: int) -> CooccurrenceMatrix:
        key = (kind, slab)
        m = self.slab_matrices.get(key)
        if m is None:
            m = self.slab_matrices[key] = CooccurrenceMatrix(key, self.window_size)
        return m

    def add_event(self, event: AlarmEvent) -> None:
        ids = [self.vocab.add(t) for t in tokenize(event.text)]
        if not ids:
            return
        combo = multifacet_slab_of(event.timestamp, self.partitions)
        slab_of = dict(zip(self.facet_order, combo))
        for wid in ids:
            self.vocab.observe(wid, slab_of)
        for a in range(len(ids)):
            for b in range(a + 1, min(a + self.window_size + 1, len(ids))):
                i, j = (ids[a], ids[b]) if ids[a] <= ids[b] else (ids[b], ids[a])
                self.global_matrix.bump(i, j)
                for kind, slab in slab_of.items():
                    self.matrix_for(kind, slab).bump(i, j)
                self.joint.setdefault((i, j), Counter())[combo] += 1

    @classmethod
    def build(
        cls,
        events: Iterable[AlarmEvent],
        partitions: Sequence[SlabPartition],
        window_size: int,
    ) -> "SlabCooccurrences":
        bundle = cls(partitions, window_size)
        for ev in events:
            bundle.add_event(ev)
        return bundle

    def facet_pair_mass(self, kind: str, a: int, b: int) -> int:
        """Pair count summed over one facet's slabs (= the global count)."""
        return sum(
            m.get(a, b) for (k, _), m in self.slab_matrices.items() if k == kind
        )
