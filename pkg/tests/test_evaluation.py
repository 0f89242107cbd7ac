import numpy as np
import pytest

from teags.evaluation import (
    BenchmarkConfig,
    EvalReport,
    benchmark,
    growth_experiment,
    mape,
    split_events,
)
from teags.fusion import SubgraphSet
from teags.ingest import AlarmEvent

from conftest import make_events


def test_mape_equal_runs_zero():
    assert mape([0.6, 0.6, 0.6]) == 0.0


def test_mape_hand_example():
    assert mape([0.5, 0.7], "mean") == pytest.approx(100.0 / 6.0, abs=1e-6)


def test_mape_median_option():
    runs = [0.4, 0.5, 0.9]
    # median 0.5 -> (0.1/0.5 + 0 + 0.4/0.5) / 3 * 100
    assert mape(runs, "median") == pytest.approx((0.2 + 0.0 + 0.8) / 3 * 100, abs=1e-9)


def test_mape_zero_actual_rejected():
    with pytest.raises(ValueError):
        mape([0.0, 0.0])


def test_mape_empty_rejected():
    with pytest.raises(ValueError):
        mape([])


def test_split_events_is_time_ordered():
    events = make_events([("n1", "c1", t, "") for t in (50, 10, 40, 20, 30)])
    train, test = split_events(events, 0.8)
    assert [e.timestamp for e in train] == [10, 20, 30, 40]
    assert [e.timestamp for e in test] == [50]


def subgraphs_of(*groups):
    return SubgraphSet([sorted(g) for g in groups], [])


def brute_force_confusion(subgraphs, test_events, theta, probes):
    """Oracle: direct scan classification of positives and given probes."""
    neighbors = subgraphs.neighbors()

    def condition(node, category, t):
        for other in neighbors.get(node, ()):
            for ev in test_events:
                if (
                    ev.node_id == other
                    and ev.category == category
                    and abs(ev.timestamp - t) < theta
                ):
                    return True
        return False

    tp = sum(1 for ev in test_events if condition(ev.node_id, ev.category, ev.timestamp))
    fn = len(test_events) - tp
    fp = sum(1 for n, c, t in probes if condition(n, c, t))
    tn = len(probes) - fp
    return tp, fp, tn, fn


def test_benchmark_hand_counted_toy():
    """10 events, 2 subgraphs; confusion matrix equals the brute-force oracle."""
    groups = subgraphs_of(["n1", "n2"], ["n3", "n4"], ["n5"])
    test_events = make_events(
        [
            ("n1", "c1", 1000, ""),   # n2 co-alarms at 1200 -> TP
            ("n2", "c1", 1200, ""),   # TP (mutual)
            ("n1", "c2", 5000, ""),   # no c2 neighbor alarm -> FN
            ("n3", "c1", 2000, ""),   # n4 has c1 at 90000 -> outside window -> FN
            ("n4", "c1", 90000, ""),  # n3 has c1 at 2000 -> FN
            ("n3", "c3", 40000, ""),  # n4 co-alarms c3 at 40100 -> TP
            ("n4", "c3", 40100, ""),  # TP
            ("n5", "c1", 1100, ""),   # singleton, no neighbors -> FN
            ("n2", "c2", 70000, ""),  # n1 has no c2 near -> FN
            ("n1", "c1", 1500, ""),   # n2 c1 at 1200 within window -> TP
        ]
    )
    cfg = BenchmarkConfig(theta_t=3600, negative_seed=7)
    report = benchmark(groups, test_events, cfg)
    # replicate the probe draw to feed the oracle the same negatives
    rng = np.random.default_rng(7)
    nodes = sorted({e.node_id for e in test_events} | set(groups.membership()))
    categories = sorted({e.category for e in test_events})
    t_lo = min(e.timestamp for e in test_events)
    t_hi = max(e.timestamp for e in test_events)
    actual = {(e.node_id, e.category): [e.timestamp] for e in test_events}
    probes = []
    for _ in range(len(test_events)):
        for _attempt in range(100):
            n = nodes[int(rng.integers(len(nodes)))]
            c = categories[int(rng.integers(len(categories)))]
            t = int(rng.integers(t_lo, t_hi + 1))
            hits = [
                ts
                for ev in test_events
                if ev.node_id == n and ev.category == c
                for ts in [ev.timestamp]
                if abs(ts - t) < 3600
            ]
            if not hits:
                break
        probes.append((n, c, t))
    tp, fp, tn, fn = brute_force_confusion(groups, test_events, 3600, probes)
    assert (report.tp, report.fp, report.tn, report.fn) == (tp, fp, tn, fn)
    assert (tp, fn) == (5, 5)
    assert report.tp + report.fn == len(test_events)
    assert report.fp + report.tn == len(test_events)


def test_benchmark_all_singletons_flags_undefined_precision():
    groups = subgraphs_of(["n1"], ["n2"])
    test_events = make_events([("n1", "c1", 100, ""), ("n2", "c1", 150, "")])
    report = benchmark(groups, test_events, BenchmarkConfig(theta_t=3600))
    assert report.tp == 0
    assert report.fp == 0
    assert report.precision == 0.0
    assert report.undefined_precision


def test_benchmark_perfect_recall_when_neighbors_co_alarm():
    groups = subgraphs_of(["n1", "n2"])
    test_events = make_events(
        [("n1", "c1", 1000, ""), ("n2", "c1", 1100, ""), ("n1", "c1", 1300, "")]
    )
    report = benchmark(groups, test_events, BenchmarkConfig(theta_t=3600))
    assert report.recall == 1.0


def test_benchmark_empty_test_set_rejected():
    with pytest.raises(ValueError):
        benchmark(subgraphs_of(["n1"]), [], BenchmarkConfig())


def test_benchmark_deterministic_given_seed():
    groups = subgraphs_of(["n1", "n2"], ["n3", "n4"])
    test_events = make_events(
        [("n1", "c1", t, "") for t in range(0, 40000, 4000)]
        + [("n2", "c1", t + 500, "") for t in range(0, 40000, 4000)]
    )
    cfg = BenchmarkConfig(theta_t=1000, negative_seed=11)
    a = benchmark(groups, test_events, cfg)
    b = benchmark(groups, test_events, cfg)
    assert (a.tp, a.fp, a.tn, a.fn) == (b.tp, b.fp, b.tn, b.fn)


def test_benchmark_strong_fixture_reaches_f_095():
    """Perfect subgraphs + tight co-alarms -> F >= 0.95."""
    rows = []
    for k in range(40):
        base = k * 50_000
        rows.append(("n1", "c1", base, ""))
        rows.append(("n2", "c1", base + 60, ""))
        rows.append(("n3", "c2", base + 7, ""))
        rows.append(("n4", "c2", base + 80, ""))
    report = benchmark(
        subgraphs_of(["n1", "n2"], ["n3", "n4"]),
        make_events(rows),
        BenchmarkConfig(theta_t=600, negative_seed=3),
    )
    assert report.f_measure >= 0.95


def test_f_measure_identities():
    r = EvalReport.from_counts(tp=10, fp=0, tn=10, fn=0)
    assert r.f_measure == 1.0
    r2 = EvalReport.from_counts(tp=0, fp=0, tn=5, fn=5)
    assert r2.f_measure == 0.0


def fake_closure(drift_from=None, drop=0.3):
    def evaluate(train, grid_events):
        if drift_from is not None and any(e.timestamp >= drift_from for e in train):
            return 0.9 - drop
        return 0.9

    return evaluate


def test_growth_delta_half_gives_single_expansion():
    events = make_events([("n1", "c1", t * 100, "") for t in range(40)])
    out = growth_experiment(events, 0.5, fake_closure())
    assert len(out) == 2
    assert out[0][0] == 0.5
    assert out[1][0] == 1.0


def test_growth_stationary_trajectory_is_flat():
    events = make_events([("n1", "c1", t * 100, "") for t in range(40)])
    out = growth_experiment(events, 0.25, fake_closure())
    drops = [out[0][1] - f for _, f in out[1:]]
    assert max(drops) < 0.03


def test_growth_drift_loses_at_least_epsilon_after_drift_point():
    events = make_events([("n1", "c1", t * 100, "") for t in range(100)])
    # drift begins at 60% of the stream
    out = growth_experiment(events, 0.1, fake_closure(drift_from=6000))
    fractions = [frac for frac, f in out if out[0][1] - f >= 0.03]
    assert fractions and min(fractions) <= 0.7


def test_growth_delta_validation():
    events = make_events([("n1", "c1", 0, "")])
    with pytest.raises(ValueError):
        growth_experiment(events, 0.6, fake_closure())
