import math

import numpy as np
import pytest

from teags.embedding import (
    CooccurrenceMatrix,
    EmbeddingConfig,
    SlabCooccurrences,
    build_cooccurrence,
    regression_grad,
    regression_loss,
    rho,
    train_owe,
    train_twe,
)
from teags.slabs import SlabPartition

from conftest import make_events


def small_cfg(**kw):
    base = dict(dimension=8, epochs=40, rng_seed=0, mode="owe")
    base.update(kw)
    return EmbeddingConfig(**base)


def test_single_entry_converges_to_log_target():
    matrix = CooccurrenceMatrix("global", 2, {(0, 1): math.e})
    vectors = train_owe(matrix, ["wa", "wb"], small_cfg(epochs=2000))
    pred = (
        float(vectors.main[0] @ vectors.context[1])
        + vectors.bias_main[0]
        + vectors.bias_context[1]
    )
    assert pred == pytest.approx(1.0, abs=1e-2)


def test_owe_loss_decreases(rng):
    docs = [
        [f"w{int(rng.integers(10))}" for _ in range(int(rng.integers(3, 9)))]
        for _ in range(30)
    ]
    matrix, vocab = build_cooccurrence(docs, 4)
    vectors = train_owe(matrix, vocab.words, small_cfg(epochs=10))
    assert vectors.final_loss < vectors.initial_loss


def test_owe_empty_matrix_rejected():
    with pytest.raises(ValueError):
        train_owe(CooccurrenceMatrix("global", 2), [], small_cfg())


def test_owe_divergence_raises():
    matrix = CooccurrenceMatrix("global", 2, {(0, 1): 50, (1, 2): 30, (0, 2): 10})
    with pytest.raises(FloatingPointError):
        train_owe(matrix, ["a", "b", "c"], small_cfg(learning_rate=200.0, epochs=60))


def test_owe_deterministic_given_seed(rng):
    docs = [[f"w{int(rng.integers(8))}" for _ in range(6)] for _ in range(20)]
    matrix, vocab = build_cooccurrence(docs, 3)
    a = train_owe(matrix, vocab.words, small_cfg(epochs=5))
    b = train_owe(matrix, vocab.words, small_cfg(epochs=5))
    assert a.losses == b.losses
    np.testing.assert_array_equal(a.main, b.main)


def test_planted_synonyms_align():
    """Words with proportional co-occurrence rows end up with close vectors."""
    docs = []
    contexts = [f"ctx{i}" for i in range(6)]
    for rep, ctx in zip([14, 10, 8, 6, 4, 2], contexts):
        for _ in range(rep):
            docs.append([ctx, "syn1", ctx])
            docs.append([ctx, "syn2", ctx])
    matrix, vocab = build_cooccurrence(docs, 2)
    vectors = train_owe(matrix, vocab.words, small_cfg(epochs=150, dimension=12))
    final = vectors.final()
    s1, s2 = vocab.index["syn1"], vocab.index["syn2"]
    cos = float(
        final[s1] @ final[s2] / (np.linalg.norm(final[s1]) * np.linalg.norm(final[s2]))
    )
    assert cos > 0.9


def single_slab_partitions():
    return [
        SlabPartition("hour", "big", 1.0, tuple([0] * 24)),
        SlabPartition("day", "big", 1.0, tuple([0] * 7)),
        SlabPartition("week", "big", 1.0, tuple([0] * 5)),
        SlabPartition("month", "big", 1.0, tuple([0] * 12)),
    ]


def corpus_bundle(rng, partitions=None, docs=24):
    rows = []
    for k in range(docs):
        text = " ".join(f"w{int(rng.integers(8))}" for _ in range(5))
        rows.append(("n1", "c1", int(rng.integers(0, 10 ** 8)), text))
    return SlabCooccurrences.build(
        make_events(rows), partitions or single_slab_partitions(), 3
    )


def test_twe_single_slab_unit_coefficient_reduces_to_rho_targets(rng):
    bundle = corpus_bundle(rng)
    cfg = small_cfg(mode="twe_con", epochs=8)
    vectors = train_twe(bundle, cfg, coefficient=lambda *a: 1.0)
    assert vectors.final_loss < vectors.initial_loss
    # with a unit coefficient every target equals the slab's log-max count
    bound = rho(bundle.slab_matrices[("hour", 0)])
    i, j, w, t = np.zeros(0), None, None, None  # structure check below instead
    from teags.embedding.training import _twe_entries

    i_arr, j_arr, w_arr, t_arr = _twe_entries(bundle, cfg, lambda *a: 1.0)
    per_facet_bounds = {rho(m) for m in bundle.slab_matrices.values() if m.entries}
    assert set(np.round(np.unique(t_arr), 12)) <= {round(b, 12) for b in per_facet_bounds}
    assert bound in per_facet_bounds


def test_twe_all_empty_slabs_rejected():
    events = make_events([("n1", "c1", 100, "solo"), ("n2", "c1", 200, "single")])
    bundle = SlabCooccurrences.build(events, single_slab_partitions(), 3)
    with pytest.raises(ValueError, match="no trainable slabs"):
        train_twe(bundle, small_cfg(mode="twe_con"))


def test_twe_bound_contract_holds(rng):
    from teags.embedding.training import _twe_entries
    from teags.embedding import f_con

    parts = [
        SlabPartition("hour", "big", 0.5, tuple(h // 6 for h in range(24))),
        SlabPartition("day", "big", 0.5, tuple(0 if d < 4 else 1 for d in range(7))),
    ]
    bundle = corpus_bundle(rng, partitions=parts, docs=50)
    cfg = small_cfg(mode="twe_con")
    i_arr, j_arr, w_arr, t_arr = _twe_entries(bundle, cfg, f_con)
    bounds = {
        (kind, slab): rho(m)
        for (kind, slab), m in bundle.slab_matrices.items()
        if m.entries
    }
    assert t_arr.max() <= max(bounds.values()) + 1e-9


def test_twe_planted_skew_ranks_synonyms_above_uniform_noise():
    rows = []
    # pair (pp, qq): all 40 co-occurrences inside hour slab 0 (hours 0-5)
    for k in range(40):
        rows.append(("n1", "c1", (k % 6) * 3600 + k, "pp qq"))
    # pair (rr, ss): 40 co-occurrences spread uniformly over all four slabs
    for k in range(40):
        hour = (k % 4) * 6 + (k % 6)
        rows.append(("n1", "c1", hour * 3600 + 86400 * (k % 5) + k, "rr ss"))
    parts = [SlabPartition("hour", "big", 0.5, tuple(h // 6 for h in range(24)))]
    bundle = SlabCooccurrences.build(make_events(rows), parts, 2)
    cfg = small_cfg(mode="twe_con", epochs=120, dimension=10)
    vectors = train_twe(bundle, cfg)
    final = vectors.final()

    def cos(u, v):
        a, b = vectors.index[u], vectors.index[v]
        return float(final[a] @ final[b] / (np.linalg.norm(final[a]) * np.linalg.norm(final[b])))

    assert cos("pp", "qq") > cos("rr", "ss")


def flatten(main, ctx, bm, bc):
    return np.concatenate([main.ravel(), ctx.ravel(), bm, bc])


def unflatten(theta, shape):
    v, d = shape
    main = theta[: v * d].reshape(v, d)
    ctx = theta[v * d : 2 * v * d].reshape(v, d)
    bm = theta[2 * v * d : 2 * v * d + v]
    bc = theta[2 * v * d + v :]
    return main, ctx, bm, bc


def test_gradient_matches_central_differences(rng):
    v, d = 6, 4
    for _ in range(5):
        main = rng.normal(size=(v, d))
        ctx = rng.normal(size=(v, d))
        bm = rng.normal(size=v)
        bc = rng.normal(size=v)
        n = 12
        i_arr = rng.integers(0, v, size=n)
        j_arr = rng.integers(0, v, size=n)
        w_arr = rng.uniform(0.1, 1.0, size=n)
        t_arr = rng.normal(size=n)

        g = flatten(*regression_grad(main, ctx, bm, bc, i_arr, j_arr, w_arr, t_arr))
        theta = flatten(main, ctx, bm, bc)
        eps = 1e-6
        num = np.zeros_like(theta)
        for k in range(theta.size):
            tp, tm = theta.copy(), theta.copy()
            tp[k] += eps
            tm[k] -= eps
            num[k] = (
                regression_loss(*unflatten(tp, (v, d)), i_arr, j_arr, w_arr, t_arr)
                - regression_loss(*unflatten(tm, (v, d)), i_arr, j_arr, w_arr, t_arr)
            ) / (2 * eps)
        denom = np.maximum(np.abs(num), 1e-8)
        assert (np.abs(g - num) / denom).max() < 1e-4
