"""Statistical benchmark, run-to-run stability, and growth analysis.

The benchmark scores recovered subgraphs against held-out events with
neighbor-within-window semantics: a (node, category, time) situation is
asserted positive when some subgraph-neighbor of the node shows a
same-category alarm inside the tolerance window. Held-out events are the
positive probes; negatives are sampled situations with no actual matching
alarm near the probe time.
"""

from __future__ import annotations

import statistics
import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fusion import SubgraphSet
from .ingest import AlarmEvent

__all__ = [
    "BenchmarkConfig",
    "EvalReport",
    "benchmark",
    "mape",
    "growth_experiment",
    "split_events",
]


@dataclass
class BenchmarkConfig:
    theta_t: int = 3600
    train_fraction: float = 0.8
    test_fraction: float = 0.2
    negative_seed: int = 0

    def validate(self) -> None:
        if self.theta_t <= 0:
            raise ValueError("theta_t must be > 0")
        if abs(self.train_fraction + self.test_fraction - 1.0) > 1e-9:
            raise ValueError("train and test fractions must sum to 1")


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f_measure: float
    undefined_precision: bool = False
    runtime_seconds: float = 0.0
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int, runtime: float = 0.0) -> "EvalReport":
        undefined = (tp + fp) == 0
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(tp, fp, tn, fn, precision, recall, f, undefined, runtime)


def split_events(events: Sequence[AlarmEvent], train_fraction: float = 0.8):
    """Time-ordered train/test split (first fraction trains)."""
    ordered = sorted(events, key=lambda e: e.timestamp)
    cut = int(round(train_fraction * len(ordered)))
    return ordered[:cut], ordered[cut:]


class _EventIndex:
    """Per (node, category) sorted alarm times for window queries."""

    def __init__(self, events: Sequence[AlarmEvent]):
        self.times: dict[tuple[str, str], list[int]] = {}
        for ev in events:
            self.times.setdefault((ev.node_id, ev.category), []).append(ev.timestamp)
        for ts in self.times.values():
            ts.sort()

    def has_within(self, node: str, category: str, t: int, theta: int) -> bool:
        """Any alarm of (node, category) strictly inside (t-theta, t+theta)."""
        ts = self.times.get((node, category))
        if not ts:
            return False
        lo = bisect_right(ts, t - theta)
        hi = bisect_left(ts, t + theta)
        return hi > lo


def _condition(index: _EventIndex, neighbors: dict[str, set[str]], node: str, category: str, t: int, theta: int) -> bool:
    for other in neighbors.get(node, ()):
        if index.has_within(other, category, t, theta):
            return True
    return False


def benchmark(
    subgraphs: SubgraphSet,
    test_events: Sequence[AlarmEvent],
    cfg: BenchmarkConfig,
) -> EvalReport:
    """Confusion matrix over held-out events plus sampled negative probes.

    Positives are the test events themselves; each counts TP when its
    neighborhood condition holds, FN otherwise. Negative probes (one per
    positive, seeded) draw a node, a category, and a time uniform over the
    test window, rejected while the node actually raised that category
    within the window around the drawn time; they count FP when the
    condition nevertheless holds, TN otherwise.
    """
    cfg.validate()
    if not test_events:
        raise ValueError("empty test set")
    start = time.perf_counter()
    neighbors = subgraphs.neighbors()
    index = _EventIndex(test_events)

    tp = fn = fp = tn = 0
    for ev in test_events:
        if _condition(index, neighbors, ev.node_id, ev.category, ev.timestamp, cfg.theta_t):
            tp += 1
        else:
            fn += 1

    rng = np.random.default_rng(cfg.negative_seed)
    nodes = sorted({ev.node_id for ev in test_events} | set(subgraphs.membership()))
    categories = sorted({ev.category for ev in test_events})
    t_lo = min(ev.timestamp for ev in test_events)
    t_hi = max(ev.timestamp for ev in test_events)
    for _ in range(len(test_events)):
        for _attempt in range(100):
            node = nodes[int(rng.integers(len(nodes)))]
            category = categories[int(rng.integers(len(categories)))]
            t = int(rng.integers(t_lo, t_hi + 1))
            if not index.has_within(node, category, t, cfg.theta_t):
                break
        if _condition(index, neighbors, node, category, t, cfg.theta_t):
            fp += 1
        else:
            tn += 1

    return EvalReport.from_counts(tp, fp, tn, fn, runtime=time.perf_counter() - start)


def mape(f_runs: Sequence[float], forecast: str = "mean") -> float:
    """Mean absolute percent error of per-run scores around their center.

    The center ("actual") is the mean or median of the runs; each run is a
    forecast. Returns a percentage.
    """
    if not f_runs:
        raise ValueError("need at least one run")
    if forecast == "mean":
        # exact rational mean so identical runs give exactly zero error
        actual = statistics.mean(f_runs)
    elif forecast == "median":
        actual = statistics.median(f_runs)
    else:
        raise ValueError("forecast must be 'mean' or 'median'")
    if actual == 0:
        raise ValueError("actual effectiveness is zero")
    return sum(abs(actual - f) / actual for f in f_runs) / len(f_runs) * 100.0


def growth_experiment(
    events: Sequence[AlarmEvent],
    delta: float,
    evaluate: Callable[[Sequence[AlarmEvent], Sequence[AlarmEvent]], float],
) -> list[tuple[float, float]]:
    """Effectiveness trajectory as data grows past frozen similarity grids.

    The stream splits in half; grids freeze at the 50% point; the data then
    grows in delta-sized fractions of the full dataset until it is all
    consumed. Returns (data fraction, F) pairs starting at (0.5, kappa^0).
    """
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 0.5]")
    ordered = sorted(events, key=lambda e: e.timestamp)
    if not ordered:
        raise ValueError("empty dataset")
    mid = len(ordered) // 2
    h0, h1 = ordered[:mid], ordered[mid:]
    out = [(0.5, evaluate(h0, h0))]
    frac = 0.5
    while frac < 1.0 - 1e-9:
        frac = min(1.0, frac + delta)
        take = min(len(h1), int(round((frac - 0.5) * len(ordered))))
        out.append((frac, evaluate(h0 + h1[:take], h0)))
        if take == len(h1):
            break
    return out
