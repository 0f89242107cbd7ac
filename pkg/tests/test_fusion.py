import itertools

import numpy as np
import pytest

from teags.fusion import (
    BilateralNetwork,
    EdgeWeights,
    coherence,
    max_heap_graph_cut,
    tune_coefficients,
)


def test_coherence_convex_combination_of_ones():
    for lam, beta in [(0.0, 0.0), (0.2, 0.4), (0.5, 0.5), (1.0, 0.0)]:
        assert coherence(1.0, 1.0, 1.0, lam, beta) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "lam,beta,expected",
    [
        (0.2, 0.4, (0.4, 0.2, 0.4)),  # channel weights (twe, owe, mgm)
        (0.1, 0.6, (0.3, 0.1, 0.6)),
    ],
)
def test_coherence_reported_coefficient_rows(lam, beta, expected):
    twe_w = coherence(0.0, 1.0, 0.0, lam, beta)
    owe_w = coherence(1.0, 0.0, 0.0, lam, beta)
    mgm_w = coherence(0.0, 0.0, 1.0, lam, beta)
    assert (twe_w, owe_w, mgm_w) == pytest.approx(expected)


def test_coherence_coefficient_violations_rejected():
    with pytest.raises(ValueError):
        coherence(0.5, 0.5, 0.5, 0.7, 0.4)
    with pytest.raises(ValueError):
        coherence(0.5, 0.5, 0.5, -0.1, 0.2)


def test_coherence_ranking_invariant_under_common_scaling(rng):
    lam, beta = 0.3, 0.3
    triples = rng.uniform(0.0, 0.5, size=(20, 3))
    base = [coherence(o, t, m, lam, beta) for o, t, m in triples]
    scaled = [coherence(2 * o, 2 * t, 2 * m, lam, beta) for o, t, m in triples]
    assert np.argsort(base).tolist() == np.argsort(scaled).tolist()


def test_tune_grid_step_one():
    calls = []

    def evaluate(lam, beta):
        calls.append((lam, beta))
        return 1.0 if (lam, beta) == (0.0, 1.0) else 0.0

    assert tune_coefficients(evaluate, 1.0) == (0.0, 1.0)
    assert set(calls) == {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)}


def test_tune_prefers_signal_channel():
    def evaluate(lam, beta):
        return beta  # only the time-only channel carries signal

    lam, beta = tune_coefficients(evaluate, 0.25)
    assert beta >= 0.5
    assert (lam, beta) == (0.0, 1.0)


def test_tune_tie_break_smallest_lam_then_beta():
    assert tune_coefficients(lambda lam, beta: 0.5, 0.5) == (0.0, 0.0)


def test_tune_step_validation():
    with pytest.raises(ValueError):
        tune_coefficients(lambda lam, beta: 0.0, 0.0)


def network(nodes, edges):
    return BilateralNetwork(sorted(nodes), {tuple(sorted((u, v))): w for u, v, w in edges})


def test_cut_edgeless_graph_all_singletons():
    out = max_heap_graph_cut(network(["a", "b", "c"], []))
    assert out.subgraphs == [["a"], ["b"], ["c"]]
    assert out.edges == []


def test_cut_path_hand_trace():
    out = max_heap_graph_cut(
        network(
            ["a", "b", "c", "d"],
            [("a", "b", 0.9), ("b", "c", 0.8), ("c", "d", 0.7), ("a", "d", 0.1), ("a", "c", 0.5)],
        )
    )
    assert sorted((u, v) for u, v, _ in out.edges) == [("a", "b"), ("b", "c"), ("c", "d")]
    assert out.subgraphs == [["a", "b", "c", "d"]]


from conftest import random_network, reference_cut  # noqa: E402


def test_cut_matches_reference_on_random_graphs(rng):
    for _ in range(300):
        nodes, edges = random_network(rng)
        got = max_heap_graph_cut(network(nodes, edges))
        exp_groups, exp_edges = reference_cut(nodes, edges)
        assert sorted(got.subgraphs) == exp_groups
        assert sorted(got.edges) == exp_edges


def is_forest(nodes, edges):
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for u, v, _ in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def test_cut_structural_invariants(rng):
    for _ in range(100):
        nodes, edges = random_network(rng)
        out = max_heap_graph_cut(network(nodes, edges))
        # forest
        assert is_forest(nodes, out.edges)
        # greedy dominance: accepted weights non-increasing
        ws = [w for _, _, w in out.edges]
        assert all(a >= b for a, b in zip(ws, ws[1:]))
        # coverage: subgraphs partition all nodes
        flat = [n for sg in out.subgraphs for n in sg]
        assert sorted(flat) == sorted(nodes)
        # cardinality bounds on covered nodes
        covered = {n for u, v, _ in out.edges for n in (u, v)}
        if covered:
            assert len(covered) / 2 <= len(out.edges) <= len(covered)


def test_edge_floor_drops_weak_edges():
    weights = EdgeWeights.fuse(
        {("a", "b"): 1.0, ("b", "c"): 0.01},
        {("a", "b"): 1.0, ("b", "c"): 0.01},
        {("a", "b"): 1.0, ("b", "c"): 0.01},
        lam=0.2,
        beta=0.4,
    )
    net = BilateralNetwork.from_weights(weights, ["a", "b", "c"], edge_floor=0.05)
    assert set(net.edges) == {("a", "b")}


def test_fuse_skips_self_pairs_and_is_unique_per_pair():
    weights = EdgeWeights.fuse({("a", "a"): 1.0, ("a", "b"): 0.5}, {}, {}, 1.0, 0.0)
    assert ("a", "a") not in weights.records
    assert list(weights.records) == [("a", "b")]
