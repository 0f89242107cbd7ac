"""Multifacet generative model for time-only edge weights.

Evidence is every unordered node pair's same-category co-alarms inside a
matching window; each instance carries its interlude and the multifacet slab
of the earlier alarm. A pair's likelihood sums, over its instances, the
product of an exponential interlude decay and a chain of slab conditionals
(each facet conditioned on its coarser parents). The conditional tables are
shared across pairs and fitted by expectation-maximization; the decay scale
is chosen from a log-spaced grid by the same likelihood.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ingest import AlarmEvent
from .slabs import SlabPartition, multifacet_slab_of

__all__ = [
    "Instance",
    "PairEvidence",
    "MgmParams",
    "collect_pair_evidence",
    "pr_seq",
    "em_fit",
    "fit_mgm",
    "pair_weight_raw",
    "edge_weights_mgm",
    "seq_only_weights",
    "THETA_GRID",
]

# Decay scales tried when fitting: 1m, 10m, 1h, 6h, 1d, 1w (seconds).
THETA_GRID = (60.0, 600.0, 3600.0, 21600.0, 86400.0, 604800.0)


@dataclass(frozen=True)
class Instance:
    """One qualifying co-alarm: category, interlude, earlier alarm's slab
    combination, and the earlier alarm's node (the fold direction)."""

    category: str
    dt: int
    combo: tuple[int, ...]
    source: str


@dataclass
class PairEvidence:
    pair: tuple[str, str]
    instances: list[Instance] = field(default_factory=list)


def collect_pair_evidence(
    events: Sequence[AlarmEvent],
    match_window: int,
    partitions: Sequence[SlabPartition],
) -> list[PairEvidence]:
    """Same-category co-alarms within the window, folded to unordered pairs.

    Events must be time-sorted per category after grouping (enforced here).
    Each qualifying alarm pair yields exactly one instance with dt >= 0 and
    the earlier alarm's multifacet slab.
    """
    by_category: dict[str, list[AlarmEvent]] = defaultdict(list)
    for ev in events:
        by_category[ev.category].append(ev)

    combo_cache: dict[int, tuple[int, ...]] = {}

    def combo_of(ts: int) -> tuple[int, ...]:
        c = combo_cache.get(ts)
        if c is None:
            c = combo_cache[ts] = multifacet_slab_of(ts, partitions)
        return c

    pairs: dict[tuple[str, str], PairEvidence] = {}
    for category, evs in by_category.items():
        evs.sort(key=lambda e: e.timestamp)
        for a in range(len(evs)):
            ea = evs[a]
            for b in range(a + 1, len(evs)):
                eb = evs[b]
                if eb.timestamp - ea.timestamp > match_window:
                    break
                if ea.node_id == eb.node_id:
                    continue
                key = tuple(sorted((ea.node_id, eb.node_id)))
                ev_pair = pairs.get(key)
                if ev_pair is None:
                    ev_pair = pairs[key] = PairEvidence(key)
                ev_pair.instances.append(
                    Instance(category, eb.timestamp - ea.timestamp, combo_of(ea.timestamp), ea.node_id)
                )
    return [pairs[k] for k in sorted(pairs)]


def pr_seq(dt: float, theta: float) -> float:
    """Sequential interlude decay exp(-dt / theta)."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if theta <= 0:
        raise ValueError("theta must be > 0")
    return math.exp(-dt / theta)


@dataclass
class MgmParams:
    """Fitted parameter set: decay scale plus per-facet conditional tables.

    ``tables[level]`` maps a parent-slab context (the combo's coarser
    components, level+1 onward) to a probability row over that facet's
    slabs; unseen contexts fall back to uniform.
    """

    theta: float
    facet_order: tuple[str, ...]
    slab_counts: tuple[int, ...]
    tables: list[dict[tuple[int, ...], np.ndarray]]
    smoothing: float = 0.1
    xi_trajectory: list[float] = field(default_factory=list)

    def chain_log_prob(self, combo: tuple[int, ...]) -> float:
        total = 0.0
        for level in range(len(self.facet_order)):
            row = self.tables[level].get(combo[level + 1 :])
            if row is None:
                total += -math.log(self.slab_counts[level])
            else:
                total += math.log(row[combo[level]])
        return total

    def check_rows(self) -> None:
        for level, table in enumerate(self.tables):
            for row in table.values():
                assert abs(row.sum() - 1.0) <= 1e-9
                assert (row >= 0).all()


def _uniform_params(
    facet_order: tuple[str, ...],
    slab_counts: tuple[int, ...],
    combos: list[tuple[int, ...]],
    theta: float,
    smoothing: float,
) -> MgmParams:
    tables: list[dict[tuple[int, ...], np.ndarray]] = []
    for level, k in enumerate(slab_counts):
        contexts = {c[level + 1 :] for c in combos}
        tables.append({ctx: np.full(k, 1.0 / k) for ctx in contexts})
    return MgmParams(theta, facet_order, slab_counts, tables, smoothing)


def _encode(evidences: Sequence[PairEvidence]):
    combos: list[tuple[int, ...]] = sorted({i.combo for e in evidences for i in e.instances})
    combo_ids = {c: k for k, c in enumerate(combos)}
    pair_idx: list[int] = []
    combo_idx: list[int] = []
    dts: list[float] = []
    for p, ev in enumerate(evidences):
        for inst in ev.instances:
            pair_idx.append(p)
            combo_idx.append(combo_ids[inst.combo])
            dts.append(float(inst.dt))
    return (
        combos,
        np.asarray(pair_idx, dtype=np.int64),
        np.asarray(combo_idx, dtype=np.int64),
        np.asarray(dts, dtype=np.float64),
    )


def _xi_and_resp(params, combos, pair_idx, combo_idx, dts, n_pairs):
    chain = np.array([params.chain_log_prob(c) for c in combos])
    loglik = -dts / params.theta + chain[combo_idx]
    pair_max = np.full(n_pairs, -np.inf)
    np.maximum.at(pair_max, pair_idx, loglik)
    shifted = np.exp(loglik - pair_max[pair_idx])
    pair_sum = np.zeros(n_pairs)
    np.add.at(pair_sum, pair_idx, shifted)
    xi = float((pair_max + np.log(pair_sum)).sum())
    resp = shifted / pair_sum[pair_idx]
    return xi, resp


def em_fit(
    evidences: Sequence[PairEvidence],
    partitions: Sequence[SlabPartition],
    theta: float,
    init: MgmParams | None = None,
    max_iters: int = 50,
    tol: float = 1e-6,
    smoothing: float = 0.1,
) -> MgmParams:
    """Expectation-maximization for the conditional tables at a fixed theta.

    The latent variable is which of a pair's instances explains the pair;
    E-step responsibilities are the softmax of the instance log-likelihoods
    within each pair, the M-step renormalizes smoothed expected slab counts
    per context row. A generalized-EM safeguard rejects any update that
    would lower the log-likelihood, so the recorded trajectory is
    non-decreasing by construction.
    """
    if not evidences or not any(e.instances for e in evidences):
        raise ValueError("empty evidence")
    facet_order = tuple(p.facet_kind for p in partitions)
    slab_counts = tuple(p.slab_count for p in partitions)
    combos, pair_idx, combo_idx, dts = _encode(evidences)
    n_pairs = len(evidences)

    params = init or _uniform_params(facet_order, slab_counts, combos, theta, smoothing)
    xi, resp = _xi_and_resp(params, combos, pair_idx, combo_idx, dts, n_pairs)
    if not np.isfinite(xi):
        raise FloatingPointError("non-finite log-likelihood")
    trajectory = [xi]

    for _ in range(max_iters):
        combo_mass = np.zeros(len(combos))
        np.add.at(combo_mass, combo_idx, resp)

        new_tables: list[dict[tuple[int, ...], np.ndarray]] = []
        for level, k in enumerate(slab_counts):
            rows: dict[tuple[int, ...], np.ndarray] = {}
            for cid, combo in enumerate(combos):
                ctx = combo[level + 1 :]
                row = rows.get(ctx)
                if row is None:
                    row = rows[ctx] = np.zeros(k)
                row[combo[level]] += combo_mass[cid]
            for ctx, row in rows.items():
                rows[ctx] = (row + smoothing) / (row.sum() + smoothing * k)
            new_tables.append(rows)

        candidate = MgmParams(theta, facet_order, slab_counts, new_tables, smoothing)
        new_xi, new_resp = _xi_and_resp(candidate, combos, pair_idx, combo_idx, dts, n_pairs)
        if not np.isfinite(new_xi):
            raise FloatingPointError("non-finite log-likelihood")
        if new_xi < xi:
            break  # safeguard: keep the better parameters
        params, resp = candidate, new_resp
        improved = new_xi - xi
        xi = new_xi
        trajectory.append(xi)
        if improved < tol:
            break

    params.xi_trajectory = trajectory
    params.check_rows()
    return params


def fit_mgm(
    evidences: Sequence[PairEvidence],
    partitions: Sequence[SlabPartition],
    theta_grid: Sequence[float] = THETA_GRID,
    **kwargs,
) -> MgmParams:
    """EM fit per decay scale on the grid; keeps the best log-likelihood."""
    best: MgmParams | None = None
    for theta in theta_grid:
        params = em_fit(evidences, partitions, theta, **kwargs)
        if best is None or params.xi_trajectory[-1] > best.xi_trajectory[-1]:
            best = params
    assert best is not None
    return best


def pair_weight_raw(evidence: PairEvidence, params: MgmParams) -> float:
    """Unnormalized pair weight: sum over instances of seq * chain terms."""
    total = 0.0
    for inst in evidence.instances:
        total += math.exp(-inst.dt / params.theta + params.chain_log_prob(inst.combo))
    return total


def edge_weights_mgm(
    evidences: Sequence[PairEvidence], params: MgmParams
) -> dict[tuple[str, str], float]:
    """Max-normalized weights in [0, 1] for every evidenced pair."""
    raw = {e.pair: pair_weight_raw(e, params) for e in evidences}
    top = max(raw.values(), default=0.0)
    if top <= 0.0:
        return {k: 0.0 for k in raw}
    return {k: v / top for k, v in raw.items()}


def seq_only_weights(
    evidences: Sequence[PairEvidence], theta: float
) -> dict[tuple[str, str], float]:
    """Interlude-decay-only weights (no slab chain), max-normalized."""
    raw = {
        e.pair: sum(math.exp(-inst.dt / theta) for inst in e.instances)
        for e in evidences
    }
    top = max(raw.values(), default=0.0)
    if top <= 0.0:
        return {k: 0.0 for k in raw}
    return {k: v / top for k, v in raw.items()}
