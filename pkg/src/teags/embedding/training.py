"""Weighted least-squares embedding trainers.

Both trainers minimize sum_w F(X) * (main_i . ctx_j + b_i + b_j - target)^2
by stochastic gradient steps with per-parameter AdaGrad rates over shuffled
nonzero entries. The global trainer targets log X_ij; the time-aware trainer
targets coefficient(i, j, slab) * log(max X in slab), summed over every slab
of every facet into one shared vector space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import cutoff, f_con, f_dep, rho
from .cooccur import CooccurrenceMatrix, SlabCooccurrences

logger = logging.getLogger(__name__)

__all__ = [
    "EmbeddingConfig",
    "WordVectors",
    "train_owe",
    "train_twe",
    "regression_loss",
    "regression_grad",
    "twe_work_units",
]


@dataclass
class EmbeddingConfig:
    dimension: int = 50
    window_size: int = 5
    alpha: float = 0.75
    x_max: float = 100.0
    learning_rate: float = 0.05
    epochs: int = 25
    zeta: int = 35
    rng_seed: int = 0
    mode: str = "owe"  # owe | twe_con | twe_dep
    smoothing: float = 0.1

    def validate(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.x_max <= 0:
            raise ValueError("x_max must be > 0")
        if self.zeta < 1:
            raise ValueError("zeta must be >= 1")
        if self.mode not in ("owe", "twe_con", "twe_dep"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.dimension < 1 or self.epochs < 1 or self.window_size < 1:
            raise ValueError("dimension, epochs, window_size must be >= 1")


@dataclass
class WordVectors:
    """Trained main/context vectors and biases; the usable vector per word
    is the element-wise mean of its main and context vectors."""

    words: list[str]
    main: np.ndarray
    context: np.ndarray
    bias_main: np.ndarray
    bias_context: np.ndarray
    losses: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.index = {w: i for i, w in enumerate(self.words)}

    @property
    def dimension(self) -> int:
        return self.main.shape[1]

    def final(self) -> np.ndarray:
        return (self.main + self.context) / 2.0

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def regression_loss(
    main: np.ndarray,
    ctx: np.ndarray,
    bias_main: np.ndarray,
    bias_ctx: np.ndarray,
    i_arr: np.ndarray,
    j_arr: np.ndarray,
    w_arr: np.ndarray,
    t_arr: np.ndarray,
) -> float:
    pred = (main[i_arr] * ctx[j_arr]).sum(axis=1) + bias_main[i_arr] + bias_ctx[j_arr]
    return float((w_arr * (pred - t_arr) ** 2).sum())


def regression_grad(
    main: np.ndarray,
    ctx: np.ndarray,
    bias_main: np.ndarray,
    bias_ctx: np.ndarray,
    i_arr: np.ndarray,
    j_arr: np.ndarray,
    w_arr: np.ndarray,
    t_arr: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradient of regression_loss w.r.t. all four parameter blocks."""
    pred = (main[i_arr] * ctx[j_arr]).sum(axis=1) + bias_main[i_arr] + bias_ctx[j_arr]
    coef = 2.0 * w_arr * (pred - t_arr)
    g_main = np.zeros_like(main)
    g_ctx = np.zeros_like(ctx)
    g_bm = np.zeros_like(bias_main)
    g_bc = np.zeros_like(bias_ctx)
    np.add.at(g_main, i_arr, coef[:, None] * ctx[j_arr])
    np.add.at(g_ctx, j_arr, coef[:, None] * main[i_arr])
    np.add.at(g_bm, i_arr, coef)
    np.add.at(g_bc, j_arr, coef)
    return g_main, g_ctx, g_bm, g_bc


def _sgd_epoch_py(main, ctx, bm, bc, am, ac, abm, abc, i_arr, j_arr, w_arr, t_arr, order, lr):
    dim = main.shape[1]
    for k in range(order.shape[0]):
        e = order[k]
        i = i_arr[e]
        j = j_arr[e]
        diff = bm[i] + bc[j] - t_arr[e]
        for d in range(dim):
            diff += main[i, d] * ctx[j, d]
        fdiff = w_arr[e] * diff
        for d in range(dim):
            tm = fdiff * ctx[j, d]
            tc = fdiff * main[i, d]
            main[i, d] -= lr * tm / math.sqrt(am[i, d])
            ctx[j, d] -= lr * tc / math.sqrt(ac[j, d])
            am[i, d] += tm * tm
            ac[j, d] += tc * tc
        bm[i] -= lr * fdiff / math.sqrt(abm[i])
        bc[j] -= lr * fdiff / math.sqrt(abc[j])
        abm[i] += fdiff * fdiff
        abc[j] += fdiff * fdiff


try:  # the jitted kernel only speeds up the identical update sequence
    from numba import njit

    _sgd_epoch = njit(cache=True)(_sgd_epoch_py)
except ImportError:  # pragma: no cover
    _sgd_epoch = _sgd_epoch_py


def _train(
    n_words: int,
    words: list[str],
    i_arr: np.ndarray,
    j_arr: np.ndarray,
    w_arr: np.ndarray,
    t_arr: np.ndarray,
    cfg: EmbeddingConfig,
) -> WordVectors:
    cfg.validate()
    rng = np.random.default_rng(cfg.rng_seed)
    scale = 0.5 / cfg.dimension
    main = rng.uniform(-scale, scale, size=(n_words, cfg.dimension))
    ctx = rng.uniform(-scale, scale, size=(n_words, cfg.dimension))
    bm = rng.uniform(-scale, scale, size=n_words)
    bc = rng.uniform(-scale, scale, size=n_words)
    am = np.ones_like(main)
    ac = np.ones_like(ctx)
    abm = np.ones_like(bm)
    abc = np.ones_like(bc)

    losses = [regression_loss(main, ctx, bm, bc, i_arr, j_arr, w_arr, t_arr)]
    for _ in range(cfg.epochs):
        order = rng.permutation(i_arr.shape[0]).astype(np.int64)
        _sgd_epoch(main, ctx, bm, bc, am, ac, abm, abc, i_arr, j_arr, w_arr, t_arr, order, cfg.learning_rate)
        loss = regression_loss(main, ctx, bm, bc, i_arr, j_arr, w_arr, t_arr)
        if not np.isfinite(loss):
            raise FloatingPointError("embedding training diverged (non-finite loss)")
        losses.append(loss)
    return WordVectors(list(words), main, ctx, bm, bc, losses)


def _owe_entries(matrix: CooccurrenceMatrix, cfg: EmbeddingConfig):
    i_list: list[int] = []
    j_list: list[int] = []
    w_list: list[float] = []
    t_list: list[float] = []
    for (a, b), c in sorted(matrix.entries.items()):
        target = math.log(c)
        weight = cutoff(c, cfg.alpha, cfg.x_max)
        i_list.append(a)
        j_list.append(b)
        w_list.append(weight)
        t_list.append(target)
        if a != b:
            i_list.append(b)
            j_list.append(a)
            w_list.append(weight)
            t_list.append(target)
    return (
        np.asarray(i_list, dtype=np.int64),
        np.asarray(j_list, dtype=np.int64),
        np.asarray(w_list, dtype=np.float64),
        np.asarray(t_list, dtype=np.float64),
    )


def train_owe(
    matrix: CooccurrenceMatrix, words: list[str], cfg: EmbeddingConfig
) -> WordVectors:
    """Global embedding on log co-occurrence targets."""
    if not matrix.entries:
        raise ValueError("co-occurrence matrix is empty")
    i_arr, j_arr, w_arr, t_arr = _owe_entries(matrix, cfg)
    return _train(len(words), words, i_arr, j_arr, w_arr, t_arr, cfg)


def _twe_entries(bundle: SlabCooccurrences, cfg: EmbeddingConfig, coefficient):
    i_list: list[int] = []
    j_list: list[int] = []
    w_list: list[float] = []
    t_list: list[float] = []
    trainable = 0
    for part in bundle.partitions:
        kind = part.facet_kind
        for slab in range(part.slab_count):
            matrix = bundle.slab_matrices.get((kind, slab))
            if matrix is None or not matrix.entries:
                logger.warning("skipping empty slab %s/%d", kind, slab)
                continue
            trainable += 1
            bound = rho(matrix)
            for (a, b), c in sorted(matrix.entries.items()):
                weight = cutoff(c, cfg.alpha, cfg.x_max)
                for (src, dst) in ((a, b),) if a == b else ((a, b), (b, a)):
                    target = coefficient(src, dst, kind, slab, bundle) * bound
                    assert target <= bound + 1e-9, "coefficient target exceeds slab bound"
                    i_list.append(src)
                    j_list.append(dst)
                    w_list.append(weight)
                    t_list.append(target)
    if trainable == 0:
        raise ValueError("no trainable slabs")
    return (
        np.asarray(i_list, dtype=np.int64),
        np.asarray(j_list, dtype=np.int64),
        np.asarray(w_list, dtype=np.float64),
        np.asarray(t_list, dtype=np.float64),
    )


def train_twe(
    bundle: SlabCooccurrences, cfg: EmbeddingConfig, coefficient=None
) -> WordVectors:
    """Time-aware embedding over every slab of every facet.

    The per-entry target is coefficient * log(max X in slab); the coefficient
    is contiguity for mode twe_con, depth for twe_dep, or any injected
    callable with the same signature.
    """
    if coefficient is None:
        if cfg.mode == "twe_con":
            coefficient = f_con
        elif cfg.mode == "twe_dep":
            def coefficient(a, b, kind, slab, bnd):
                return f_dep(a, b, kind, slab, bnd, cfg.smoothing)
        else:
            raise ValueError("cfg.mode must be twe_con or twe_dep (or pass coefficient)")
    i_arr, j_arr, w_arr, t_arr = _twe_entries(bundle, cfg, coefficient)
    return _train(len(bundle.vocab), bundle.vocab.words, i_arr, j_arr, w_arr, t_arr, cfg)


def twe_work_units(bundle: SlabCooccurrences) -> tuple[int, int, float]:
    """Slab-size accounting: (sum over slabs of |V_k^l|^2, |V|^2, ratio).

    A slab's vocabulary is the set of words observed in it. The ratio is the
    measured slab-vocabulary independence of the corpus.
    """
    total = 0
    for kind, slabs in bundle.vocab.slab_counts.items():
        for counter in slabs.values():
            total += len(counter) ** 2
    full = len(bundle.vocab) ** 2
    return total, full, (total / full if full else 0.0)
