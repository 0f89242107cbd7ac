"""Split-by-split similarity grids from textual and temporal evidence.

For each calendar facet, a grid scores how alike every pair of splits is:
either from the splits' aggregated alarm texts (modified TF-IDF vectors under
the cosine metric) or from co-alarm category structure under a stratified
sampling scheme and a linear correlation measure. Entries that cannot be
decided are left missing (NaN) and later filled by masked non-negative matrix
factorization.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import log, sqrt

import numpy as np

from .ingest import NtaCube, tokenize

__all__ = [
    "SimilarityGrid",
    "SamplingPlan",
    "tfidf_weight",
    "split_vectors",
    "textual_grid",
    "temporal_grid",
    "nmf_complete",
]


@dataclass
class SimilarityGrid:
    """eta x eta similarity matrix for one facet; NaN marks missing entries."""

    facet_kind: str
    evidence: str  # "textual" | "temporal"
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.matrix)

    def check(self, completed: bool = True) -> None:
        """Assert the grid invariants (symmetry, unit diagonal, range)."""
        m = self.matrix
        assert m.shape[0] == m.shape[1]
        obs = ~np.isnan(m)
        if completed:
            assert obs.all(), "completed grid still has missing entries"
        assert np.allclose(np.where(obs, m, 0), np.where(obs.T, m.T, 0), atol=1e-12)
        assert np.all(np.diag(m)[~np.isnan(np.diag(m))] == 1.0)
        vals = m[obs]
        assert ((vals >= 0.0) & (vals <= 1.0)).all()


@dataclass
class SamplingPlan:
    """Stratified sampling knobs for temporal evidence collection."""

    p: float = 0.1
    q: int = 30
    rng_seed: int = 0
    max_iterations: int = 1000

    def validate(self) -> None:
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        if self.q < 1:
            raise ValueError("q must be >= 1")


def tfidf_weight(freq: int, max_freq: int, n_splits: int, n_containing: int) -> float:
    """Normalized term weight for one split: (f/max_f) * ln(N / N_t).

    Zero when the term is absent from the split. A term recorded as present
    with no containing split is an internal inconsistency.
    """
    if freq == 0:
        return 0.0
    if n_containing == 0:
        raise ValueError("term has nonzero frequency but no containing split")
    return (freq / max_freq) * log(n_splits / n_containing)


def split_vectors(cube: NtaCube) -> list[dict[str, float] | None]:
    """Per-split TF-IDF term vectors; None for splits with no text."""
    eta = cube.facet.split_count
    freqs: list[Counter] = [Counter(tokenize(cube.split_text(s))) for s in range(eta)]
    containing: Counter = Counter()
    for f in freqs:
        containing.update(f.keys())
    vectors: list[dict[str, float] | None] = []
    for f in freqs:
        if not f:
            vectors.append(None)
            continue
        max_f = max(f.values())
        vec = {
            t: w
            for t, c in f.items()
            if (w := tfidf_weight(c, max_f, eta, containing[t])) != 0.0
        }
        vectors.append(vec)
    return vectors


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    na = sqrt(sum(w * w for w in a.values()))
    nb = sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return float("nan")
    return dot / (na * nb)


def textual_grid(cube: NtaCube) -> SimilarityGrid:
    """Cosine similarity between the splits' TF-IDF vectors.

    Splits with no text (or whose every term is ubiquitous, leaving a zero
    vector) get missing rows/columns rather than zeros.
    """
    eta = cube.facet.split_count
    vectors = split_vectors(cube)
    m = np.full((eta, eta), np.nan)
    for i in range(eta):
        vi = vectors[i]
        if vi is not None and not vi:
            vi = None  # all weights vanished
        for j in range(i + 1, eta):
            vj = vectors[j]
            if vj is not None and not vj:
                vj = None
            if vi is None or vj is None:
                continue
            c = _cosine(vi, vj)
            if not np.isnan(c):
                m[i, j] = m[j, i] = min(max(c, 0.0), 1.0)
    np.fill_diagonal(m, 1.0)
    return SimilarityGrid(cube.facet.kind, "textual", m)


def _pearson(xs: list[int], ys: list[int]) -> float:
    """Pearson r; NaN when x is degenerate, 0 when only y is constant.

    Per evidence row y <= x, so a constant x carries no usable signal while
    a constant y under varying x means "no linear relationship" rather than
    "unknown".
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    sx = x.std()
    sy = y.std()
    if sx == 0.0:
        return float("nan")
    if sy == 0.0:
        return 0.0
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def temporal_grid(cube: NtaCube, plan: SamplingPlan) -> SimilarityGrid:
    """Correlation of co-alarm category structure between split pairs.

    Nodes are sampled with replacement (a p-fraction per iteration, positions
    drawn in first-appearance order so relabeling ids changes nothing) until
    every reachable split pair has at least q evidences or the iteration cap
    hits. A sampled node contributes, for each pair i<j where it raised at
    least one alarm in i or j, the evidence (number of categories it raised
    in split i, number of categories shared between splits i and j). The
    entry is the Pearson correlation of the evidence list mapped to [0, 1]
    via (r+1)/2; pairs that stay below q evidences, or whose first coordinate
    never varies, are missing.
    """
    plan.validate()
    eta = cube.facet.split_count
    nodes = list(cube.node_order)
    by_node = cube.node_categories_by_split()
    if not nodes:
        raise ValueError("insufficient data: cube has no nodes")
    rng = np.random.default_rng(plan.rng_seed)
    per_iter = max(1, int(round(plan.p * len(nodes))))

    active_splits = {s for splits in by_node.values() for s in splits}
    feasible = {
        (i, j)
        for i in range(eta)
        for j in range(i + 1, eta)
        if i in active_splits or j in active_splits
    }
    evidence: dict[tuple[int, int], tuple[list[int], list[int]]] = {p: ([], []) for p in feasible}

    for _ in range(plan.max_iterations):
        idx = rng.integers(len(nodes), size=per_iter)
        for k in idx:
            splits = by_node.get(nodes[int(k)], {})
            if not splits:
                continue
            touched = {
                (a, b) if a < b else (b, a)
                for a in splits
                for b in range(eta)
                if b != a
            }
            for (i, j) in touched:
                ci = splits.get(i)
                cj = splits.get(j)
                xs, ys = evidence[(i, j)]
                xs.append(len(ci) if ci else 0)
                ys.append(len(ci & cj) if ci and cj else 0)
        if all(len(evidence[p][0]) >= plan.q for p in feasible):
            break

    m = np.full((eta, eta), np.nan)
    any_scored = False
    for (i, j), (xs, ys) in evidence.items():
        if len(xs) < max(plan.q, 2):
            continue
        r = _pearson(xs, ys)
        if np.isnan(r):
            continue
        m[i, j] = m[j, i] = min(max((r + 1.0) / 2.0, 0.0), 1.0)
        any_scored = True
    if not any_scored:
        raise ValueError("insufficient data: no split pair reached the evidence quota")
    np.fill_diagonal(m, 1.0)
    return SimilarityGrid(cube.facet.kind, "temporal", m)


def nmf_complete(
    grid: SimilarityGrid,
    rank: int | None = None,
    iterations: int = 500,
    rng_seed: int = 0,
    return_objective: bool = False,
):
    """Fill missing grid entries by masked multiplicative-update NMF.

    The factorization fits observed entries only; missing cells are replaced
    by the low-rank reconstruction clamped to [0, 1], observed cells are kept
    verbatim, the result is symmetrized by averaging with its transpose, and
    the diagonal is reset to 1. The masked objective sum((M - WH)^2 over
    observed cells) is non-increasing across iterations and can be returned
    for inspection.
    """
    eta = grid.size
    if rank is None:
        rank = max(2, eta // 4)
    if rank >= eta:
        raise ValueError(f"rank {rank} must be smaller than grid size {eta}")

    mask = ~grid.missing_mask()
    a = np.where(mask, grid.matrix, 0.0)
    objective: list[float] = []
    if mask.all():
        out = SimilarityGrid(grid.facet_kind, grid.evidence, grid.matrix.copy())
        return (out, objective) if return_objective else out

    rng = np.random.default_rng(rng_seed)
    w = rng.uniform(0.1, 1.0, size=(eta, rank))
    h = rng.uniform(0.1, 1.0, size=(rank, eta))
    eps = 1e-12
    maskf = mask.astype(float)
    for _ in range(iterations):
        wh = w @ h
        h *= (w.T @ (maskf * a)) / (w.T @ (maskf * wh) + eps)
        wh = w @ h
        w *= ((maskf * a) @ h.T) / ((maskf * wh) @ h.T + eps)
        wh = w @ h
        objective.append(float(((maskf * (a - wh)) ** 2).sum()))

    filled = np.clip(w @ h, 0.0, 1.0)
    m = np.where(mask, grid.matrix, filled)
    m = (m + m.T) / 2.0
    m[mask & mask.T] = grid.matrix[mask & mask.T]  # observed values verbatim
    np.fill_diagonal(m, 1.0)
    out = SimilarityGrid(grid.facet_kind, grid.evidence, m)
    out.check(completed=True)
    return (out, objective) if return_objective else out
