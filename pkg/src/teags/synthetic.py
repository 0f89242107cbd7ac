"""Synthetic propagation datasets with planted subgraphs and temporal skew.

Stands in for real alarm-propagation corpora: a fixed node population, a few
planted tightly-connected subgraphs, per-subgraph category sets and topic
vocabularies, and per-subgraph split preferences along any of the calendar
facets. In-subgraph activity is emitted as small same-category cascades so
that co-alarm evidence exists between planted neighbors; the remaining
fraction of events is uniform noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .ingest import AlarmEvent, FACET_BY_KIND, facet_split

__all__ = ["SyntheticSpec", "generate_synthetic", "CalendarSampler"]

DAY = 86400

# Default corpus window: two full years.
_DEFAULT_START = date(2016, 1, 1)
_DEFAULT_END = date(2017, 12, 31)


@dataclass
class SyntheticSpec:
    """Recipe for one synthetic dataset.

    ``facet_skew`` holds one dict per planted subgraph, mapping a facet kind
    to a probability vector over that facet's splits; omitted facets are
    uniform. ``noise_rate`` is the fraction of events drawn as uniform noise
    (nodes, categories, words, and times all unstructured).
    """

    node_count: int
    planted_subgraphs: list[list[str]]
    vocab_size: int = 120
    facet_skew: list[dict[str, list[float]]] = field(default_factory=list)
    event_count: int = 1000
    noise_rate: float = 0.2
    rng_seed: int = 0
    words_per_event: int = 6
    categories_per_subgraph: int = 2
    category_pool: int = 8
    category_sets: list[list[str]] | None = None
    confuser_rate: float = 0.0
    late_fraction: float = 0.0
    late_start: float = 0.75
    late_solo_rate: float = 0.5
    noise_vocab: int = 6
    cascade_size: tuple[int, int] = (2, 5)
    start: date = _DEFAULT_START
    end: date = _DEFAULT_END

    def validate(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must lie in [0, 1]")
        seen: set[str] = set()
        for sg in self.planted_subgraphs:
            if seen & set(sg):
                raise ValueError("planted subgraphs must be disjoint")
            seen |= set(sg)
        if self.facet_skew and len(self.facet_skew) != len(self.planted_subgraphs):
            raise ValueError("facet_skew must give one entry per planted subgraph")
        for skew in self.facet_skew:
            for kind, probs in skew.items():
                facet = FACET_BY_KIND.get(kind)
                if facet is None:
                    raise ValueError(f"unknown facet {kind!r} in facet_skew")
                if len(probs) != facet.split_count:
                    raise ValueError(f"{kind} skew needs {facet.split_count} entries")
                arr = np.asarray(probs, dtype=float)
                if (arr < 0).any() or arr.sum() <= 0:
                    raise ValueError(f"{kind} skew is not a distribution")
        if self.vocab_size < self.noise_vocab + len(self.planted_subgraphs):
            raise ValueError("vocab_size too small for topics plus noise pool")


class CalendarSampler:
    """Draws timestamps whose per-facet splits follow planted distributions.

    Sampling is constructive: a (month, week-of-month, weekday) triple is
    drawn from the planted (or uniform) distributions, a concrete day with
    those coordinates is picked from the date range, and the hour split is
    appended. Infeasible calendar triples are resampled, so each facet's
    marginal tracks its planted distribution up to calendar availability.
    """

    def __init__(self, start: date = _DEFAULT_START, end: date = _DEFAULT_END):
        self.start = start
        self.end = end
        self._days: dict[tuple[int, int, int], list[int]] = {}
        d = start
        while d <= end:
            key = (d.month - 1, (d.day - 1) // 7, d.weekday())
            epoch_day = (d - date(1970, 1, 1)).days
            self._days.setdefault(key, []).append(epoch_day)
            d += timedelta(days=1)

    def span(self) -> tuple[int, int]:
        lo = (self.start - date(1970, 1, 1)).days * DAY
        hi = ((self.end - date(1970, 1, 1)).days + 1) * DAY
        return lo, hi

    def sample(self, rng: np.random.Generator, skew: dict[str, list[float]]) -> int:
        def draw(kind: str) -> int:
            n = FACET_BY_KIND[kind].split_count
            probs = skew.get(kind)
            if probs is None:
                return int(rng.integers(n))
            p = np.asarray(probs, dtype=float)
            return int(rng.choice(n, p=p / p.sum()))

        for _ in range(1000):
            key = (draw("month"), draw("week"), draw("day"))
            days = self._days.get(key)
            if days:
                day = days[int(rng.integers(len(days)))]
                return day * DAY + draw("hour") * 3600 + int(rng.integers(3600))
        raise ValueError("no feasible calendar day for the planted skew")

    def sample_uniform(self, rng: np.random.Generator) -> int:
        lo, hi = self.span()
        return int(rng.integers(lo, hi))


def _topic_assignments(spec: SyntheticSpec, rng: np.random.Generator):
    """Vocabulary, per-subgraph topic word lists, noise pool, category sets."""
    vocab = [f"w{idx:04d}" for idx in range(spec.vocab_size)]
    noise_pool = vocab[: spec.noise_vocab]
    topical = vocab[spec.noise_vocab :]
    k = len(spec.planted_subgraphs)
    topics: list[list[str]] = []
    if k:
        per = max(1, len(topical) // k)
        for i in range(k):
            chunk = topical[i * per : (i + 1) * per]
            topics.append(chunk if chunk else [topical[i % len(topical)]])
    categories = [f"c{idx}" for idx in range(spec.category_pool)]
    if spec.category_sets is not None:
        if len(spec.category_sets) != k:
            raise ValueError("category_sets must give one list per planted subgraph")
        cat_sets = [list(cs) for cs in spec.category_sets]
    else:
        cat_sets = []
        for i in range(k):
            picks = rng.choice(
                spec.category_pool,
                size=min(spec.categories_per_subgraph, spec.category_pool),
                replace=False,
            )
            cat_sets.append([categories[j] for j in sorted(picks)])
    return vocab, topics, noise_pool, categories, cat_sets


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[AlarmEvent], list[list[str]]]:
    """Emit a deterministic event stream plus the planted ground truth.

    In-subgraph events arrive as cascades: one category, 2-5 distinct member
    nodes, timestamps a few minutes apart, texts drawn from the subgraph's
    topic list. Noise events pick node, category, and time uniformly and
    text from the small noise pool.
    """
    spec.validate()
    rng = np.random.default_rng(spec.rng_seed)
    sampler = CalendarSampler(spec.start, spec.end)
    vocab, topics, noise_pool, categories, cat_sets = _topic_assignments(spec, rng)
    all_nodes = [f"n{idx:04d}" for idx in range(spec.node_count)]
    subgraphs = [list(sg) for sg in spec.planted_subgraphs]

    def words(pool: list[str], n: int) -> str:
        idx = rng.integers(len(pool), size=n)
        return " ".join(pool[i] for i in idx)

    events: list[AlarmEvent] = []
    serial = 0

    def emit(node: str, category: str, ts: int, text: str) -> None:
        nonlocal serial
        events.append(AlarmEvent(f"a{serial:07d}", node, category, ts, text))
        serial += 1

    lo, hi = sampler.span()
    late_cutoff = lo + spec.late_start * (hi - lo)
    late_count = [
        int(np.ceil(spec.late_fraction * len(sg))) if spec.late_fraction > 0 else 0
        for sg in subgraphs
    ]
    while len(events) < spec.event_count:
        if subgraphs and rng.random() >= spec.noise_rate:
            g = int(rng.integers(len(subgraphs)))
            skew = spec.facet_skew[g] if spec.facet_skew else {}
            category = cat_sets[g][int(rng.integers(len(cat_sets[g])))]
            base = sampler.sample(rng, skew)
            # Late-coupling members stay out of cascades until late_start;
            # before that they only raise solo alarms (text, no co-alarms).
            n_late = late_count[g]
            if base < late_cutoff and n_late:
                if n_late < len(subgraphs[g]) and rng.random() < spec.late_solo_rate:
                    # Solo alarms carry the group's vocabulary but a private
                    # per-node category, so they never create co-alarm pairs.
                    node = subgraphs[g][len(subgraphs[g]) - 1 - int(rng.integers(n_late))]
                    emit(node, f"s_{node}", base, words(topics[g], spec.words_per_event))
                    continue
                member_groups = [(n, g) for n in subgraphs[g][: len(subgraphs[g]) - n_late]]
            else:
                member_groups = [(n, g) for n in subgraphs[g]]
            if len(subgraphs) > 1 and rng.random() < spec.confuser_rate:
                # Environmental coincidence: one cascade spans two planted
                # groups; the contagion keeps the first group's category but
                # every node reports in its own group's vocabulary.
                g2 = int(rng.integers(len(subgraphs) - 1))
                g2 = g2 if g2 < g else g2 + 1
                member_groups = member_groups + [(n, g2) for n in subgraphs[g2]]
            size = int(rng.integers(spec.cascade_size[0], spec.cascade_size[1] + 1))
            size = min(size, len(member_groups), spec.event_count - len(events))
            size = max(size, 1)
            picked = rng.choice(len(member_groups), size=size, replace=False)
            # Keep the whole cascade inside the sampled hour so the planted
            # skew stays exact for every member alarm.
            hour_start = base - (base % 3600)
            offsets = np.sort(rng.integers(0, 3600, size=size))
            for j, off in zip(picked, offsets):
                node, grp = member_groups[int(j)]
                emit(node, category, hour_start + int(off), words(topics[grp], spec.words_per_event))
        else:
            node = all_nodes[int(rng.integers(len(all_nodes)))]
            category = categories[int(rng.integers(len(categories)))]
            emit(node, category, sampler.sample_uniform(rng), words(noise_pool, spec.words_per_event))

    events = events[: spec.event_count]
    events.sort(key=lambda e: (e.timestamp, e.alarm_id))
    return events, [sorted(sg) for sg in subgraphs]


def block_skew(kind: str, block_probs: list[float], blocks: list[list[int]]) -> dict[str, list[float]]:
    """Spread block-level probabilities uniformly over each block's splits.

    Convenience for planting coarse preferences, e.g. four 6-hour blocks of
    the hour facet with given block masses.
    """
    facet = FACET_BY_KIND[kind]
    probs = [0.0] * facet.split_count
    for mass, block in zip(block_probs, blocks):
        for s in block:
            probs[s] += mass / len(block)
    return {kind: probs}
