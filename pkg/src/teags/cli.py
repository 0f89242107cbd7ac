"""Command-line entry points for every pipeline stage.

Exit codes: 0 on success, 2 for configuration errors, 3 for stage failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as tio
from .evaluation import BenchmarkConfig, benchmark, growth_experiment
from .grids import SamplingPlan, nmf_complete, temporal_grid, textual_grid
from .ingest import FACETS, IngestError, build_nta_cube
from .mgm import collect_pair_evidence, edge_weights_mgm, fit_mgm
from .pipeline import (
    ConfigError,
    PipelineConfig,
    StageError,
    make_trigger_evaluator,
    run_ablation,
    run_pipeline,
)
from .slabs import TriggerConfig, estimate_trigger, make_partitions
from .synthetic import SyntheticSpec, generate_synthetic
from .fusion import BilateralNetwork, max_heap_graph_cut


def _cmd_ingest(args) -> int:
    events = tio.read_events_file(args.inp, args.format)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tio.write_events_file(events, out / "events.csv", "csv")
    for facet in FACETS:
        cube = build_nta_cube(events, facet)
        tio.write_cube_json(cube, out / f"cube_{facet.kind}.json")
    print(f"ingested {len(events)} events; cubes written to {out}")
    return 0


def _cmd_synth(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        raw = json.load(fh)
    spec = SyntheticSpec(**raw)
    events, ground_truth = generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tio.write_events_file(events, out / "events.csv", "csv")
    tio.write_ground_truth(ground_truth, out / "ground_truth.json")
    print(f"generated {len(events)} events over {spec.node_count} nodes -> {out}")
    return 0


def _cmd_grids(args) -> int:
    cubes_dir = Path(args.cubes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kinds = ("textual", "temporal") if args.evidence == "both" else (args.evidence,)
    for facet in FACETS:
        cube = tio.read_cube_json(cubes_dir / f"cube_{facet.kind}.json")
        for evidence in kinds:
            if evidence == "textual":
                raw = textual_grid(cube)
            else:
                raw = temporal_grid(cube, SamplingPlan(args.p, args.q, rng_seed=args.seed))
            tio.write_grid_tsv(raw, out / f"{facet.kind}_{evidence}_raw.tsv")
            done = nmf_complete(raw, rng_seed=args.seed)
            tio.write_grid_tsv(done, out / f"{facet.kind}_{evidence}.tsv")
    print(f"grids written to {out}")
    return 0


def _cmd_slabs(args) -> int:
    grids_dir = Path(args.grids)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in sorted(grids_dir.glob("*.tsv")):
        if path.stem.endswith("_raw"):
            continue
        grid = tio.read_grid_tsv(path)
        big, small = make_partitions(grid, args.big, args.small)
        tio.write_partition_json(big, out / f"{path.stem}_big.json")
        tio.write_partition_json(small, out / f"{path.stem}_small.json")
        print(f"{path.stem}: big={big.slab_count} small={small.slab_count} slabs")
    return 0


def _load_partitions(slabs_dir: str, evidence: str, variant: str):
    out = []
    for facet in FACETS:
        path = Path(slabs_dir) / f"{facet.kind}_{evidence}_{variant}.json"
        out.append(tio.read_partition_json(path))
    return out


def _cmd_embed(args) -> int:
    from .embedding import EmbeddingConfig, SlabCooccurrences, train_owe, train_twe

    events = tio.read_events_file(args.events)
    partitions = _load_partitions(args.slabs, "textual", args.variant)
    bundle = SlabCooccurrences.build(events, partitions, args.window)
    cfg = EmbeddingConfig(
        dimension=args.dim, window_size=args.window, zeta=args.zeta,
        epochs=args.epochs, rng_seed=args.seed, mode=args.mode,
    )
    if args.mode == "owe":
        vectors = train_owe(bundle.global_matrix, bundle.vocab.words, cfg)
    else:
        vectors = train_twe(bundle, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tio.write_vectors(vectors, out / f"{args.mode}.txt")
    tio.write_matrix_tsv(bundle.global_matrix, bundle.vocab.words, out / "global_matrix.tsv")
    print(f"{args.mode}: loss {vectors.initial_loss:.2f} -> {vectors.final_loss:.2f}; vectors in {out}")
    return 0


def _cmd_mgm(args) -> int:
    events = tio.read_events_file(args.events)
    partitions = _load_partitions(args.slabs, "temporal", args.variant)
    evidence = collect_pair_evidence(events, args.match_window, partitions)
    if not evidence:
        print("no co-alarm evidence in input", file=sys.stderr)
        return 3
    params = fit_mgm(evidence, partitions)
    weights = edge_weights_mgm(evidence, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tio.write_params_json(params, out / "params.json")
    with open(out / "mgm_weights.tsv", "w", encoding="utf-8") as fh:
        fh.write("u\tv\tw_mgm\n")
        for (u, v), w in sorted(weights.items()):
            fh.write(f"{u}\t{v}\t{w:.6f}\n")
    print(f"fitted theta={params.theta:.0f}s over {len(evidence)} pairs -> {out}")
    return 0


def _cmd_cut(args) -> int:
    from .fusion import EdgeWeights, coherence, tune_coefficients

    weights = tio.read_edges_tsv(args.edges)

    def _refuse(w, lam_c, beta_c):
        out_w = EdgeWeights()
        for pair, (o, t, m, _) in w.records.items():
            out_w.records[pair] = (o, t, m, coherence(o, t, m, lam_c, beta_c))
        return out_w

    lam, beta = args.lam, args.beta
    if args.tune:
        if not args.events:
            print("--tune needs --events with validation data", file=sys.stderr)
            return 2
        validation = tio.read_events_file(args.events)

        def evaluate(lam_c: float, beta_c: float) -> float:
            cut = max_heap_graph_cut(
                BilateralNetwork.from_weights(
                    _refuse(weights, lam_c, beta_c), [], args.floor
                )
            )
            try:
                return benchmark(cut, validation, BenchmarkConfig(theta_t=args.theta_t)).f_measure
            except ValueError:
                return 0.0

        lam, beta = tune_coefficients(evaluate, args.tune_step)
        print(f"tuned lambda={lam} beta={beta}")

    refused = _refuse(weights, lam, beta)
    network = BilateralNetwork.from_weights(refused, [], args.floor)
    subgraphs = max_heap_graph_cut(network)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tio.write_edges_tsv(refused, out / "edges.tsv")
    tio.write_subgraphs_json(subgraphs, out / "subgraphs.json")
    sizes = sorted((len(s) for s in subgraphs.subgraphs), reverse=True)
    print(f"{len(subgraphs.subgraphs)} subgraphs (largest {sizes[:5]}) -> {out}")
    return 0


def _cmd_eval(args) -> int:
    subgraphs = tio.read_subgraphs_json(args.subgraphs)
    events = tio.read_events_file(args.events)
    report = benchmark(subgraphs, events, BenchmarkConfig(theta_t=args.theta_t, negative_seed=args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tio.write_json(
        {
            "counts": {"tp": report.tp, "fp": report.fp, "tn": report.tn, "fn": report.fn},
            "precision": report.precision,
            "recall": report.recall,
            "f_measure": report.f_measure,
            "undefined_precision": report.undefined_precision,
            "theta_t": args.theta_t,
        },
        out / "eval.json",
    )
    print(f"P={report.precision:.4f} R={report.recall:.4f} F={report.f_measure:.4f} -> {out}")
    return 0


def _cmd_trigger(args) -> int:
    events = tio.read_events_file(args.events)
    config = PipelineConfig.from_json(args.config) if args.config else PipelineConfig(events_path=args.events)
    result = estimate_trigger(
        TriggerConfig(args.epsilon, args.delta), events, make_trigger_evaluator(config)
    )
    print(
        f"interval: {result.events} events (~{result.span_seconds}s)"
        f" kappa0={result.kappa0:.4f} fired={result.fired}"
    )
    return 0


def _cmd_growth(args) -> int:
    events = tio.read_events_file(args.events)
    config = PipelineConfig.from_json(args.config) if args.config else PipelineConfig(events_path=args.events)
    trajectory = growth_experiment(events, args.delta, make_trigger_evaluator(config))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "growth.tsv", "w", encoding="utf-8") as fh:
        fh.write("fraction\tf_measure\n")
        for frac, f in trajectory:
            fh.write(f"{frac:.4f}\t{f:.6f}\n")
    drops = [trajectory[0][1] - f for _, f in trajectory[1:]]
    fired = any(d >= args.epsilon for d in drops)
    print(f"{len(trajectory)} points, max drop {max(drops, default=0.0):.4f}, epsilon crossed: {fired}")
    return 0


def _cmd_run(args) -> int:
    config = PipelineConfig.from_json(args.config)
    result = run_pipeline(config, args.out)
    r = result.report
    print(
        f"P={r.precision:.4f} R={r.recall:.4f} F={r.f_measure:.4f}"
        f" subgraphs={len(result.artifacts.subgraphs.subgraphs)} -> {args.out}"
    )
    return 0


def _cmd_ablate(args) -> int:
    config = PipelineConfig.from_json(args.config)
    methods = tuple(args.methods.split(",")) if args.methods else None
    reports = run_ablation(config, methods, args.out)
    print("method\tP\tR\tF")
    for method, r in reports.items():
        print(f"{method}\t{r.precision:.4f}\t{r.recall:.4f}\t{r.f_measure:.4f}")
    return 0


def _cmd_sweep(args) -> int:
    from .pipeline import zeta_sweep

    config = PipelineConfig.from_json(args.config)
    zetas = [int(z) for z in args.zetas.split(",") if z]
    rows = zeta_sweep(config, zetas, args.out)
    for z, f in rows:
        print(f"zeta={z}\tF={f:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teags", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse events and build per-facet cubes")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("grids", help="build similarity grids from cubes")
    p.add_argument("--cubes", required=True)
    p.add_argument("--evidence", choices=["textual", "temporal", "both"], default="both")
    p.add_argument("--out", required=True)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--q", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_grids)

    p = sub.add_parser("slabs", help="cluster splits into big/small slabs")
    p.add_argument("--grids", required=True)
    p.add_argument("--big", type=float, default=0.6)
    p.add_argument("--small", type=float, default=0.35)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_slabs)

    p = sub.add_parser("embed", help="train word vectors")
    p.add_argument("--mode", choices=["owe", "twe_con", "twe_dep"], required=True)
    p.add_argument("--slabs", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--variant", choices=["big", "small"], default="big")
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--zeta", type=int, default=35)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_embed)

    p = sub.add_parser("mgm", help="fit the generative time-only channel")
    p.add_argument("--events", required=True)
    p.add_argument("--slabs", required=True)
    p.add_argument("--variant", choices=["big", "small"], default="big")
    p.add_argument("--match-window", type=int, default=3600)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_mgm)

    p = sub.add_parser("cut", help="fuse channels and cut the network")
    p.add_argument("--edges", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.4)
    p.add_argument("--tune", action="store_true")
    p.add_argument("--events", default=None, help="validation events for --tune")
    p.add_argument("--theta-t", type=int, default=3600)
    p.add_argument("--tune-step", type=float, default=0.1)
    p.add_argument("--floor", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_cut)

    p = sub.add_parser("sweep", help="F-measure as a function of expansion size")
    p.add_argument("--config", required=True)
    p.add_argument("--zetas", default="5,10,15,20,25,30,35,40,45,50")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("eval", help="benchmark subgraphs on held-out events")
    p.add_argument("--subgraphs", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--theta-t", type=int, default=3600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("trigger", help="estimate the grid-refresh interval")
    p.add_argument("--events", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(fn=_cmd_trigger)

    p = sub.add_parser("growth", help="effectiveness-vs-growth trajectory")
    p.add_argument("--events", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=0.03)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_growth)

    p = sub.add_parser("run", help="run the full pipeline from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("ablate", help="compare channel-recipe baselines")
    p.add_argument("--config", required=True)
    p.add_argument("--methods", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, IngestError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
