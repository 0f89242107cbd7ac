"""Encyclopedic node representations and pairwise semantic weights.

A node's text is expanded by replacing each in-vocabulary token with its
nearest embedding neighbors; two nodes are then compared by the cosine of
their TF-IDF-weighted mean expansion vectors.
"""

from __future__ import annotations

from collections import Counter
from math import log

import numpy as np

from ..ingest import tokenize
from .training import WordVectors

__all__ = ["expand_representation", "NodeSemantics", "node_pair_weight"]


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return m / norms


def expand_representation(
    text: str | list[str],
    vectors: WordVectors,
    zeta: int,
    include_self: bool = False,
) -> list[str]:
    """Replace each known token by its zeta nearest vocabulary words.

    Neighbors are ranked by cosine of the final (mean of main and context)
    vectors; the token itself is excluded unless include_self is set.
    Out-of-vocabulary tokens are dropped.
    """
    if zeta < 1:
        raise ValueError("zeta must be >= 1")
    tokens = tokenize(text) if isinstance(text, str) else list(text)
    unit = _unit_rows(vectors.final())
    out: list[str] = []
    for tok in tokens:
        wid = vectors.index.get(tok)
        if wid is None:
            continue
        sims = unit @ unit[wid]
        ranked = np.argsort(-sims, kind="stable")
        picked = 0
        if include_self:
            out.append(tok)
            picked += 1
        for cand in ranked:
            if picked >= zeta:
                break
            if int(cand) == wid:
                continue
            out.append(vectors.words[int(cand)])
            picked += 1
    return out


class NodeSemantics:
    """Pairwise node weights from expanded representations.

    Each node's expansion multiset is folded to a single vector as the
    TF-IDF-weighted mean of the member word vectors (document frequency over
    nodes; uniform fallback when every term is ubiquitous). The pair weight
    is the cosine of the two node vectors clamped into [0, 1].
    """

    def __init__(
        self,
        node_texts: dict[str, str],
        vectors: WordVectors,
        zeta: int,
        include_self: bool = False,
    ):
        self.vectors = vectors
        self.zeta = zeta
        final = vectors.final()
        expansions = {
            node: Counter(expand_representation(text, vectors, zeta, include_self))
            for node, text in node_texts.items()
        }
        n_nodes = len(expansions)
        df: Counter = Counter()
        for counts in expansions.values():
            df.update(counts.keys())

        self._node_vec: dict[str, np.ndarray] = {}
        for node, counts in expansions.items():
            if not counts:
                self._node_vec[node] = np.zeros(vectors.dimension)
                continue
            ids = np.array([vectors.index[w] for w in counts], dtype=np.int64)
            tf = np.array([c for c in counts.values()], dtype=float)
            idf = np.array([log(n_nodes / df[w]) for w in counts], dtype=float)
            weights = tf * idf
            if weights.sum() <= 0.0:
                weights = tf
            vec = (weights[:, None] * final[ids]).sum(axis=0) / weights.sum()
            self._node_vec[node] = vec

    def node_vector(self, node: str) -> np.ndarray:
        return self._node_vec[node]

    def pair_weight(self, u: str, v: str) -> float:
        a = self._node_vec.get(u)
        b = self._node_vec.get(v)
        if a is None or b is None:
            return 0.0
        na = np.linalg.norm(a)
        nb = np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            return 0.0
        return float(min(1.0, max(0.0, (a @ b) / (na * nb))))

    def all_pair_weights(self, nodes: list[str]) -> dict[tuple[str, str], float]:
        """Vectorized weights for every unordered pair of the given nodes."""
        mat = np.stack([self._node_vec.get(n, np.zeros(self.vectors.dimension)) for n in nodes])
        norms = np.linalg.norm(mat, axis=1)
        safe = np.where(norms == 0.0, 1.0, norms)
        unit = mat / safe[:, None]
        sims = np.clip(unit @ unit.T, 0.0, 1.0)
        out: dict[tuple[str, str], float] = {}
        for i in range(len(nodes)):
            if norms[i] == 0.0:
                continue
            for j in range(i + 1, len(nodes)):
                if norms[j] == 0.0:
                    continue
                key = (nodes[i], nodes[j]) if nodes[i] <= nodes[j] else (nodes[j], nodes[i])
                out[key] = float(sims[i, j])
        return out


def node_pair_weight(
    u: str,
    v: str,
    node_texts: dict[str, str],
    vectors: WordVectors,
    zeta: int,
) -> float:
    """One-shot pair weight; build a NodeSemantics once for repeated queries."""
    return NodeSemantics(node_texts, vectors, zeta).pair_weight(u, v)
