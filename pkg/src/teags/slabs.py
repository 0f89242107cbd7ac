"""Temporal slabs: clustering similar splits and the grid-refresh trigger.

Splits of one facet are merged into unifacet slabs by complete-linkage
agglomerative clustering on distance 1 - similarity, cut at two thresholds
(a loose one for big clusters, a tight one for small clusters). A multifacet
slab is the tuple of a timestamp's unifacet slab ids across the active
facets. The trigger estimator replays a divide-and-expand protocol to decide
after how much data growth the similarity grids must be rebuilt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grids import SimilarityGrid
from .ingest import AlarmEvent, facet_split

__all__ = [
    "SlabPartition",
    "hac_complete_linkage",
    "make_partitions",
    "multifacet_slab_of",
    "TriggerConfig",
    "TriggerResult",
    "estimate_trigger",
]


@dataclass
class SlabPartition:
    """Maps each split of a facet to its slab id (ids contiguous from 0)."""

    facet_kind: str
    variant: str  # "big" | "small"
    threshold: float
    assignment: tuple[int, ...]

    @property
    def slab_count(self) -> int:
        return max(self.assignment) + 1 if self.assignment else 0

    def slabs(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.slab_count)]
        for split, slab in enumerate(self.assignment):
            out[slab].append(split)
        return out

    def check(self, grid: SimilarityGrid | None = None) -> None:
        assert sorted(set(self.assignment)) == list(range(self.slab_count))
        if grid is not None:
            d = 1.0 - grid.matrix
            for members in self.slabs():
                for a in members:
                    for b in members:
                        if a < b:
                            assert d[a, b] <= self.threshold + 1e-12


def hac_complete_linkage(
    grid: SimilarityGrid, threshold: float, variant: str = "small"
) -> SlabPartition:
    """Complete-linkage agglomerative clustering cut at a distance threshold.

    Distance is 1 - similarity. The closest cluster pair merges while its
    complete-linkage distance stays <= threshold; ties prefer the pair whose
    (smallest-member, smallest-member) labels are lexicographically least.
    Slab ids are assigned by each slab's smallest split index.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    if grid.missing_mask().any():
        raise ValueError("grid must be completed before clustering")
    d = 1.0 - grid.matrix
    clusters: list[list[int]] = [[i] for i in range(grid.size)]

    def linkage(a: list[int], b: list[int]) -> float:
        return max(d[i, j] for i in a for j in b)

    while len(clusters) > 1:
        best: tuple[float, int, int, int, int] | None = None
        for x in range(len(clusters)):
            for y in range(x + 1, len(clusters)):
                lo, hi = sorted((clusters[x][0], clusters[y][0]))
                cand = (linkage(clusters[x], clusters[y]), lo, hi, x, y)
                if best is None or cand[:3] < best[:3]:
                    best = cand
        dist, _, _, x, y = best
        if dist > threshold:
            break
        merged = sorted(clusters[x] + clusters[y])
        clusters = [c for k, c in enumerate(clusters) if k not in (x, y)] + [merged]

    clusters.sort(key=lambda c: c[0])
    assignment = [0] * grid.size
    for slab_id, members in enumerate(clusters):
        for split in members:
            assignment[split] = slab_id
    part = SlabPartition(grid.facet_kind, variant, threshold, tuple(assignment))
    part.check(grid)
    return part


def make_partitions(
    grid: SimilarityGrid, big_threshold: float, small_threshold: float
) -> tuple[SlabPartition, SlabPartition]:
    """Cut one dendrogram at a loose and a tight threshold (big, small)."""
    if not (0.0 <= small_threshold <= big_threshold <= 1.0):
        raise ValueError("need 0 <= small_threshold <= big_threshold <= 1")
    big = hac_complete_linkage(grid, big_threshold, variant="big")
    small = hac_complete_linkage(grid, small_threshold, variant="small")
    assert big.slab_count <= small.slab_count
    return big, small


def multifacet_slab_of(
    timestamp: int, partitions: Sequence[SlabPartition]
) -> tuple[int, ...]:
    """Per-facet slab ids for one timestamp, in the partitions' order."""
    return tuple(
        p.assignment[facet_split(p.facet_kind, timestamp)] for p in partitions
    )


@dataclass
class TriggerConfig:
    """Knobs for trigger-interval estimation.

    epsilon is the tolerated F-measure drop; delta the expansion step as a
    fraction of the second half of the evaluation data.
    """

    epsilon: float
    delta: float

    def validate(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")


@dataclass
class TriggerResult:
    """Outcome of the divide-and-expand estimation.

    ``events`` is the growth interval (how many new events the frozen grids
    tolerate); ``span_seconds`` the wall-clock span those events cover;
    ``kappas`` the effectiveness trajectory starting at kappa^0.
    """

    events: int
    span_seconds: int
    kappa0: float
    kappas: list[float]
    fired: bool


def estimate_trigger(
    cfg: TriggerConfig,
    events: Sequence[AlarmEvent],
    evaluate: Callable[[Sequence[AlarmEvent], Sequence[AlarmEvent]], float],
) -> TriggerResult:
    """Divide-and-expand estimation of the grid-refresh interval.

    ``evaluate(train_events, grid_events)`` must run the subgraph pipeline
    with similarity grids/slabs built from ``grid_events`` only and return
    the benchmark F-measure. The event stream is split into halves; the
    first half fixes the grids and the baseline kappa^0; the data then grows
    by delta-sized portions of the second half, and the first expansion
    whose effectiveness drops by at least epsilon from kappa^0 defines the
    interval. If no drop reaches epsilon the full second half is returned.
    """
    cfg.validate()
    events = sorted(events, key=lambda e: e.timestamp)
    if not events:
        raise ValueError("empty evaluation dataset")
    mid = len(events) // 2
    h0, h1 = list(events[:mid]), list(events[mid:])
    kappa0 = evaluate(h0, h0)
    kappas = [kappa0]

    steps = int(np.ceil(1.0 / cfg.delta))
    result_events = len(h1)
    fired = False
    for i in range(1, steps + 1):
        take = min(len(h1), int(round(i * cfg.delta * len(h1))))
        kappa_i = evaluate(h0 + h1[:take], h0)
        kappas.append(kappa_i)
        if kappa0 - kappa_i >= cfg.epsilon:
            result_events = take
            fired = True
            break
        if take == len(h1):
            break

    covered = h1[: result_events if result_events else 1]
    span = covered[-1].timestamp - h0[-1].timestamp if covered else 0
    return TriggerResult(result_events, span, kappa0, kappas, fired)
