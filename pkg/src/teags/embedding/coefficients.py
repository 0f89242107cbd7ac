"""Slab-based coefficients that scale the embedding regression targets.

Two attributes score how a word pair behaves inside one temporal slab: the
contiguity coefficient (a Jaccard-style share of the pair's facet-wide usage
that co-occurs in the slab) and the depth coefficient (a Bayes chain through
the slab's parent facets). Both land in [0, 1], so coefficient * rho never
exceeds the slab's log-max co-occurrence bound.
"""

from __future__ import annotations

from collections import Counter
from math import exp, log

from .cooccur import CooccurrenceMatrix, SlabCooccurrences

__all__ = ["cutoff", "rho", "f_con", "f_dep", "conditional_affinity"]


def cutoff(x: float, alpha: float = 0.75, x_max: float = 100.0) -> float:
    """Regression weight that damps rare counts and caps frequent ones."""
    if x < 0:
        raise ValueError("count must be >= 0")
    return (x / x_max) ** alpha if x < x_max else 1.0


def rho(matrix: CooccurrenceMatrix) -> float:
    """Natural log of the slab's maximum co-occurrence count."""
    m = matrix.max_count()
    if m <= 0:
        raise ValueError("empty slab matrix")
    return log(m)


def f_con(a: int, b: int, kind: str, slab: int, bundle: SlabCooccurrences) -> float:
    """Contiguity: slab co-occurrences over facet-wide joint usage.

    Intersection is the pair's co-occurrence count in the slab; union is the
    two words' facet usage minus their facet-wide co-occurrences. Zero when
    the union is empty; clipped into [0, 1].
    """
    inter = bundle.matrix_for(kind, slab).get(a, b)
    union = (
        bundle.vocab.facet_count(a, kind)
        + bundle.vocab.facet_count(b, kind)
        - bundle.facet_pair_mass(kind, a, b)
    )
    if union <= 0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


def conditional_affinity(a: int, b: int, bundle: SlabCooccurrences, s: float = 0.1) -> float:
    """Smoothed non-temporal weight for b to co-occur in a's context.

    Row-normalized global co-occurrence with Laplace mass s, so absent pairs
    keep a strictly positive affinity.
    """
    num = bundle.global_matrix.get(a, b) + s
    den = bundle.global_matrix.row_sum(a) + s * max(1, len(bundle.vocab))
    return num / den


def f_dep(
    a: int, b: int, kind: str, slab: int, bundle: SlabCooccurrences, s: float = 0.1
) -> float:
    """Depth: joint probability of the pair evolving in the slab, chained
    through the parent facets.

    The chain is fixed top-down: at each coarser facet the pair's modal slab
    (largest co-occurrence count in the already-fixed context, ties to the
    smaller id) conditions the next level, and each conditional is a
    Laplace-smoothed count ratio over the pair's co-occurrence events. The
    product is evaluated in log space and clamped to [0, 1].
    """
    joint = bundle.joint.get((a, b) if a <= b else (b, a), Counter())
    order = bundle.facet_order
    fi = order.index(kind)

    log_p = log(conditional_affinity(a, b, bundle, s))
    context: dict[int, int] = {}

    def level_counts(level: int) -> tuple[Counter, int]:
        counts: Counter = Counter()
        total = 0
        for tup, c in joint.items():
            if all(tup[kf] == v for kf, v in context.items()):
                counts[tup[level]] += c
                total += c
        return counts, total

    for level in range(len(order) - 1, fi, -1):
        counts, total = level_counts(level)
        k_level = bundle.slab_count_of(order[level])
        if counts:
            top = max(counts.values())
            modal = min(sl for sl, c in counts.items() if c == top)
        else:
            modal = 0
        log_p += log((counts.get(modal, 0) + s) / (total + s * k_level))
        context[level] = modal

    counts, total = level_counts(fi)
    k_here = bundle.slab_count_of(kind)
    log_p += log((counts.get(slab, 0) + s) / (total + s * k_here))
    return min(1.0, exp(log_p))
