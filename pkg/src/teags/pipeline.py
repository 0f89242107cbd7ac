"""Full-pipeline orchestration, configuration, and ablation recipes.

One JSON-loadable configuration drives a reproducible run: ingest or
synthesize events, split by time, build cubes and similarity grids, cluster
splits into big/small slabs, train the global and time-aware embeddings,
fit the generative model, fuse the channel weights, cut the bilateral
network, and benchmark the subgraphs on the held-out tail. Every stage
artifact is written and hashed so reruns can be checked bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
import zlib
from dataclasses import dataclass, field, asdict
from datetime import date
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import io as tio
from .embedding import (
    EmbeddingConfig,
    NodeSemantics,
    SlabCooccurrences,
    train_owe,
    train_twe,
    twe_work_units,
)
from .evaluation import BenchmarkConfig, EvalReport, benchmark, split_events
from .fusion import BilateralNetwork, EdgeWeights, SubgraphSet, max_heap_graph_cut, tune_coefficients
from .grids import SamplingPlan, SimilarityGrid, nmf_complete, temporal_grid, textual_grid
from .ingest import FACETS, AlarmEvent, build_nta_cube
from .mgm import (
    MgmParams,
    PairEvidence,
    THETA_GRID,
    collect_pair_evidence,
    edge_weights_mgm,
    fit_mgm,
    pair_weight_raw,
    seq_only_weights,
)
from .slabs import SlabPartition, make_partitions
from .synthetic import SyntheticSpec, generate_synthetic

logger = logging.getLogger(__name__)

__all__ = [
    "PipelineConfig",
    "ConfigError",
    "StageError",
    "PipelineResult",
    "run_pipeline",
    "run_ablation",
    "zeta_sweep",
    "make_trigger_evaluator",
    "child_seed",
    "ABLATION_METHODS",
]

ABLATION_METHODS = ("PTM", "CTA", "BDI", "MATES", "OWE", "TWE", "TEALS")


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name. Exit code 3."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


def child_seed(root: int, label: str) -> int:
    """Stable per-stage seed fanned out from the root seed."""
    return int(np.random.SeedSequence([root, zlib.crc32(label.encode())]).generate_state(1)[0])


@dataclass
class PipelineConfig:
    """Every knob of a run; a single JSON document drives it."""

    events_path: str | None = None
    events_format: str | None = None
    synthetic: dict | None = None
    lam: float = 0.2
    beta: float = 0.4
    tune: bool = False
    tune_step: float = 0.1
    zeta: int = 35
    alpha: float = 0.75
    x_max: float = 100.0
    dimension: int = 50
    window_size: int = 5
    learning_rate: float = 0.05
    epochs: int = 25
    big_threshold: float = 0.6
    small_threshold: float = 0.35
    active_variant: str = "big"
    theta_t: int = 3600
    theta_match: int = 3600
    epsilon: float = 0.03
    delta: float = 0.1
    nmf_rank: int | None = None
    nmf_iterations: int = 500
    sampling_p: float = 0.1
    sampling_q: int = 30
    sampling_cap: int = 1000
    edge_floor: float = 0.05
    seed: int = 0
    twe_mode: str = "twe_con"
    smoothing: float = 0.1
    theta_grid: tuple[float, ...] = THETA_GRID
    methods: tuple[str, ...] = ABLATION_METHODS

    def validate(self) -> None:
        if self.events_path is None and self.synthetic is None:
            raise ConfigError("config needs events_path or synthetic")
        if self.lam < 0 or self.beta < 0 or self.lam + self.beta > 1.0 + 1e-12:
            raise ConfigError("need lam >= 0, beta >= 0, lam + beta <= 1")
        if self.active_variant not in ("big", "small"):
            raise ConfigError("active_variant must be 'big' or 'small'")
        if not (0.0 <= self.small_threshold <= self.big_threshold <= 1.0):
            raise ConfigError("need 0 <= small_threshold <= big_threshold <= 1")
        if self.twe_mode not in ("twe_con", "twe_dep"):
            raise ConfigError("twe_mode must be twe_con or twe_dep")
        for m in self.methods:
            if m not in ABLATION_METHODS:
                raise ConfigError(f"unknown ablation method {m!r}")
        try:
            self.embedding_config("owe").validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def embedding_config(self, mode: str) -> EmbeddingConfig:
        return EmbeddingConfig(
            dimension=self.dimension,
            window_size=self.window_size,
            alpha=self.alpha,
            x_max=self.x_max,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            zeta=self.zeta,
            rng_seed=child_seed(self.seed, f"embed:{mode}"),
            mode=mode,
            smoothing=self.smoothing,
        )

    def synthetic_spec(self) -> SyntheticSpec:
        d = dict(self.synthetic or {})
        if "start" in d:
            d["start"] = date.fromisoformat(d["start"])
        if "end" in d:
            d["end"] = date.fromisoformat(d["end"])
        if "cascade_size" in d:
            d["cascade_size"] = tuple(d["cascade_size"])
        return SyntheticSpec(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        if "theta_grid" in raw:
            raw["theta_grid"] = tuple(raw["theta_grid"])
        if "methods" in raw:
            raw["methods"] = tuple(raw["methods"])
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta_grid"] = list(self.theta_grid)
        d["methods"] = list(self.methods)
        return d


@dataclass
class Artifacts:
    """In-memory view of every stage output plus file hashes."""

    events: list[AlarmEvent] = field(default_factory=list)
    ground_truth: list[list[str]] | None = None
    train: list[AlarmEvent] = field(default_factory=list)
    test: list[AlarmEvent] = field(default_factory=list)
    grids: dict[tuple[str, str], SimilarityGrid] = field(default_factory=dict)
    partitions: dict[tuple[str, str, str], SlabPartition] = field(default_factory=dict)
    bundle: SlabCooccurrences | None = None
    owe_vectors: object = None
    twe_vectors: object = None
    owe_weights: dict = field(default_factory=dict)
    twe_weights: dict = field(default_factory=dict)
    mgm_weights: dict = field(default_factory=dict)
    evidence: list[PairEvidence] = field(default_factory=list)
    mgm_params: MgmParams | None = None
    edge_weights: EdgeWeights | None = None
    subgraphs: SubgraphSet | None = None
    report: EvalReport | None = None
    lam: float = 0.0
    beta: float = 0.0
    work_units: tuple[int, int, float] = (0, 0, 0.0)
    hashes: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)


@dataclass
class PipelineResult:
    config: PipelineConfig
    artifacts: Artifacts
    out_dir: Path | None

    @property
    def report(self) -> EvalReport:
        assert self.artifacts.report is not None
        return self.artifacts.report


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _partitions_for(
    art: Artifacts, evidence: str, variant: str
) -> list[SlabPartition]:
    return [art.partitions[(f.kind, evidence, variant)] for f in FACETS]


def _load_events(config: PipelineConfig) -> tuple[list[AlarmEvent], list[list[str]] | None]:
    if config.synthetic is not None:
        events, gt = generate_synthetic(config.synthetic_spec())
        return events, gt
    return tio.read_events_file(config.events_path, config.events_format), None


def _build_grids_and_slabs(
    art: Artifacts,
    grid_events: Sequence[AlarmEvent],
    config: PipelineConfig,
) -> None:
    plan_seed = child_seed(config.seed, "sampling")
    for f in FACETS:
        cube = build_nta_cube(list(grid_events), f)
        pairs = (
            ("textual", textual_grid(cube)),
            (
                "temporal",
                temporal_grid(
                    cube,
                    SamplingPlan(
                        config.sampling_p,
                        config.sampling_q,
                        rng_seed=plan_seed,
                        max_iterations=config.sampling_cap,
                    ),
                ),
            ),
        )
        for evidence, raw in pairs:
            art.grids[(f.kind, f"{evidence}_raw")] = raw
            completed = nmf_complete(
                raw,
                rank=config.nmf_rank,
                iterations=config.nmf_iterations,
                rng_seed=child_seed(config.seed, f"nmf:{f.kind}:{evidence}"),
            )
            art.grids[(f.kind, evidence)] = completed
            big, small = make_partitions(completed, config.big_threshold, config.small_threshold)
            art.partitions[(f.kind, evidence, "big")] = big
            art.partitions[(f.kind, evidence, "small")] = small


def _node_texts(events: Sequence[AlarmEvent]) -> dict[str, str]:
    parts: dict[str, list[str]] = {}
    for ev in sorted(events, key=lambda e: e.timestamp):
        if ev.text:
            parts.setdefault(ev.node_id, []).append(ev.text)
    return {n: " ".join(p) for n, p in parts.items()}


def _compute_channels(
    art: Artifacts,
    train: Sequence[AlarmEvent],
    config: PipelineConfig,
    channels: set[str],
) -> None:
    """Fill the requested channel weights from the training events."""
    text_parts = _partitions_for(art, "textual", config.active_variant)
    time_parts = _partitions_for(art, "temporal", config.active_variant)
    nodes = sorted({ev.node_id for ev in train})
    texts = _node_texts(train)

    if channels & {"owe", "twe"}:
        art.bundle = SlabCooccurrences.build(train, text_parts, config.window_size)
        art.work_units = twe_work_units(art.bundle)
        if "owe" in channels:
            vectors = train_owe(
                art.bundle.global_matrix, art.bundle.vocab.words, config.embedding_config("owe")
            )
            art.owe_vectors = vectors
            sem = NodeSemantics(texts, vectors, config.zeta)
            art.owe_weights = sem.all_pair_weights(nodes)
        if "twe" in channels:
            vectors = train_twe(art.bundle, config.embedding_config(config.twe_mode))
            art.twe_vectors = vectors
            sem = NodeSemantics(texts, vectors, config.zeta)
            art.twe_weights = sem.all_pair_weights(nodes)

    if "mgm" in channels:
        art.evidence = collect_pair_evidence(train, config.theta_match, time_parts)
        if art.evidence:
            art.mgm_params = fit_mgm(
                art.evidence,
                time_parts,
                theta_grid=config.theta_grid,
                smoothing=config.smoothing,
            )
            art.mgm_weights = edge_weights_mgm(art.evidence, art.mgm_params)
        else:
            logger.warning("no co-alarm evidence; time-only channel is empty")
            art.mgm_weights = {}


def _cut_and_score(
    art: Artifacts,
    config: PipelineConfig,
    lam: float,
    beta: float,
    test: Sequence[AlarmEvent],
    owe=None,
    twe=None,
    mgm=None,
) -> tuple[EdgeWeights, SubgraphSet, EvalReport]:
    weights = EdgeWeights.fuse(
        owe if owe is not None else art.owe_weights,
        twe if twe is not None else art.twe_weights,
        mgm if mgm is not None else art.mgm_weights,
        lam,
        beta,
    )
    nodes = sorted({ev.node_id for ev in art.train}) if art.train else []
    network = BilateralNetwork.from_weights(weights, nodes, config.edge_floor)
    subgraphs = max_heap_graph_cut(network)
    report = benchmark(
        subgraphs,
        list(test),
        BenchmarkConfig(theta_t=config.theta_t, negative_seed=child_seed(config.seed, "probes")),
    )
    return weights, subgraphs, report


def _tune(art: Artifacts, config: PipelineConfig) -> tuple[float, float]:
    """Grid-search lam/beta on a validation tail of the training window."""
    subtrain, validation = split_events(art.train, 0.8)
    if not validation:
        return config.lam, config.beta

    def evaluate(lam: float, beta: float) -> float:
        try:
            _, _, report = _cut_and_score(art, config, lam, beta, validation)
        except ValueError:
            return 0.0
        return report.f_measure

    return tune_coefficients(evaluate, config.tune_step)


def run_pipeline(config: PipelineConfig, out_dir: str | Path | None = None) -> PipelineResult:
    """Execute every stage in dependency order, persisting artifacts."""
    config.validate()
    out = Path(out_dir) if out_dir is not None else None
    art = Artifacts()

    def stage(name: str, fn: Callable[[], None]) -> None:
        t0 = time.perf_counter()
        try:
            fn()
        except (ConfigError, StageError):
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        art.timings[name] = time.perf_counter() - t0

    def persist(name: str, writer: Callable[[Path], None]) -> None:
        if out is None:
            return
        out.mkdir(parents=True, exist_ok=True)
        path = out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(path)
        art.hashes[name] = _hash_file(path)

    def s_events() -> None:
        art.events, art.ground_truth = _load_events(config)
        if not art.events:
            raise ValueError("no events to process")
        art.train, art.test = split_events(art.events)
        persist("events.csv", lambda p: tio.write_events_file(art.events, p, "csv"))
        if art.ground_truth is not None:
            persist("ground_truth.json", lambda p: tio.write_ground_truth(art.ground_truth, p))

    def s_grids() -> None:
        _build_grids_and_slabs(art, art.train, config)
        for (kind, evidence), grid in art.grids.items():
            persist(f"grids/{kind}_{evidence}.tsv", lambda p, g=grid: tio.write_grid_tsv(g, p))
        for (kind, evidence, variant), part in art.partitions.items():
            persist(
                f"slabs/{kind}_{evidence}_{variant}.json",
                lambda p, pt=part: tio.write_partition_json(pt, p),
            )

    def s_channels() -> None:
        _compute_channels(art, art.train, config, {"owe", "twe", "mgm"})
        if out is not None:
            persist("embed/owe.txt", lambda p: tio.write_vectors(art.owe_vectors, p))
            persist("embed/twe.txt", lambda p: tio.write_vectors(art.twe_vectors, p))
            persist(
                "embed/global_matrix.tsv",
                lambda p: tio.write_matrix_tsv(art.bundle.global_matrix, art.bundle.vocab.words, p),
            )
            if art.mgm_params is not None:
                persist("mgm/params.json", lambda p: tio.write_params_json(art.mgm_params, p))

    def s_fuse_cut_eval() -> None:
        lam, beta = (config.lam, config.beta)
        if config.tune:
            lam, beta = _tune(art, config)
        art.lam, art.beta = lam, beta
        art.edge_weights, art.subgraphs, art.report = _cut_and_score(
            art, config, lam, beta, art.test
        )
        persist("edges.tsv", lambda p: tio.write_edges_tsv(art.edge_weights, p))
        persist("subgraphs.json", lambda p: tio.write_subgraphs_json(art.subgraphs, p))

    stage("events", s_events)
    stage("grids", s_grids)
    stage("channels", s_channels)
    stage("fuse_cut_eval", s_fuse_cut_eval)

    if out is not None:
        report_payload = _report_payload(config, art)
        persist("report.json", lambda p: tio.write_json(report_payload, p))
        # Wall-clock timings are informational and stay out of the hashed set.
        tio.write_json(art.timings, out / "timings.json")
        tio.write_json(art.hashes, out / "manifest.json")
    return PipelineResult(config, art, out)


def _report_payload(config: PipelineConfig, art: Artifacts) -> dict:
    r = art.report
    return {
        "config": config.to_dict(),
        "counts": {"tp": r.tp, "fp": r.fp, "tn": r.tn, "fn": r.fn},
        "metrics": {
            "precision": r.precision,
            "recall": r.recall,
            "f_measure": r.f_measure,
            "undefined_precision": r.undefined_precision,
        },
        "coefficients": {"lam": art.lam, "beta": art.beta},
        "work_units": {
            "slab_vocab_sq_sum": art.work_units[0],
            "vocab_sq": art.work_units[1],
            "ratio": art.work_units[2],
        },
        "subgraph_count": len(art.subgraphs.subgraphs) if art.subgraphs else 0,
    }


def _bdi_weights(art: Artifacts) -> dict:
    """Directed evidence scored separately per direction, then merged."""
    assert art.mgm_params is not None
    raw: dict[tuple[str, str], float] = {}
    for ev in art.evidence:
        total = 0.0
        for direction in (ev.pair[0], ev.pair[1]):
            sub = PairEvidence(ev.pair, [i for i in ev.instances if i.source == direction])
            if sub.instances:
                total += pair_weight_raw(sub, art.mgm_params)
        raw[ev.pair] = total
    top = max(raw.values(), default=0.0)
    if top <= 0:
        return {k: 0.0 for k in raw}
    return {k: v / top for k, v in raw.items()}


def run_ablation(
    config: PipelineConfig, methods: Sequence[str] | None = None, out_dir: str | Path | None = None
) -> dict[str, EvalReport]:
    """Score channel recipes on one shared split and seed.

    PTM uses only the interlude decay (decay scale shared with the fitted
    generative model); CTA restricts the generative model to the hour and
    day facets; BDI keeps all four facets but scores each propagation
    direction separately before merging; MATES is the full generative
    channel; OWE/TWE are the single embedding channels; TEALS is the full
    fusion.
    """
    config.validate()
    methods = tuple(methods) if methods is not None else config.methods
    if not methods:
        raise ConfigError("no ablation methods requested")
    for m in methods:
        if m not in ABLATION_METHODS:
            raise ConfigError(f"unknown ablation method {m!r}")

    art = Artifacts()
    art.events, art.ground_truth = _load_events(config)
    art.train, art.test = split_events(art.events)
    _build_grids_and_slabs(art, art.train, config)
    _compute_channels(art, art.train, config, {"owe", "twe", "mgm"})

    reports: dict[str, EvalReport] = {}
    for method in methods:
        if method == "TEALS":
            lam, beta = (config.lam, config.beta)
            if config.tune:
                lam, beta = _tune(art, config)
            _, _, report = _cut_and_score(art, config, lam, beta, art.test)
        elif method == "OWE":
            _, _, report = _cut_and_score(art, config, 1.0, 0.0, art.test, twe={}, mgm={})
        elif method == "TWE":
            _, _, report = _cut_and_score(art, config, 0.0, 0.0, art.test, owe={}, mgm={})
        elif method == "MATES":
            _, _, report = _cut_and_score(art, config, 0.0, 1.0, art.test, owe={}, twe={})
        elif method == "PTM":
            theta = art.mgm_params.theta if art.mgm_params else 3600.0
            weights = seq_only_weights(art.evidence, theta)
            _, _, report = _cut_and_score(
                art, config, 0.0, 1.0, art.test, owe={}, twe={}, mgm=weights
            )
        elif method == "BDI":
            weights = _bdi_weights(art) if art.mgm_params else {}
            _, _, report = _cut_and_score(
                art, config, 0.0, 1.0, art.test, owe={}, twe={}, mgm=weights
            )
        elif method == "CTA":
            time_parts = [
                art.partitions[(kind, "temporal", config.active_variant)]
                for kind in ("hour", "day")
            ]
            evidence = collect_pair_evidence(art.train, config.theta_match, time_parts)
            if evidence:
                params = fit_mgm(
                    evidence, time_parts, theta_grid=config.theta_grid, smoothing=config.smoothing
                )
                weights = edge_weights_mgm(evidence, params)
            else:
                weights = {}
            _, _, report = _cut_and_score(
                art, config, 0.0, 1.0, art.test, owe={}, twe={}, mgm=weights
            )
        reports[method] = report

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            m: {"precision": r.precision, "recall": r.recall, "f_measure": r.f_measure}
            for m, r in reports.items()
        }
        tio.write_json(payload, out / "ablation.json")
        with open(out / "ablation.tsv", "w", encoding="utf-8") as fh:
            fh.write("method\tprecision\trecall\tf_measure\n")
            for m in methods:
                r = reports[m]
                fh.write(f"{m}\t{r.precision:.6f}\t{r.recall:.6f}\t{r.f_measure:.6f}\n")
    return reports


def zeta_sweep(
    config: PipelineConfig,
    zetas: Sequence[int],
    out_dir: str | Path | None = None,
) -> list[tuple[int, float]]:
    """F-measure as a function of the expansion size, all else shared.

    Grids, slabs, embeddings, and the generative channel are computed once;
    only the node representations and the downstream fuse/cut/benchmark are
    recomputed per expansion size. Writes a plot-ready TSV when out_dir is
    given.
    """
    config.validate()
    if not zetas:
        raise ConfigError("no zeta values requested")
    art = Artifacts()
    art.events, art.ground_truth = _load_events(config)
    art.train, art.test = split_events(art.events)
    _build_grids_and_slabs(art, art.train, config)
    _compute_channels(art, art.train, config, {"owe", "twe", "mgm"})

    nodes = sorted({ev.node_id for ev in art.train})
    texts = _node_texts(art.train)
    rows: list[tuple[int, float]] = []
    for zeta in zetas:
        owe_w = NodeSemantics(texts, art.owe_vectors, zeta).all_pair_weights(nodes)
        twe_w = NodeSemantics(texts, art.twe_vectors, zeta).all_pair_weights(nodes)
        _, _, report = _cut_and_score(
            art, config, config.lam, config.beta, art.test, owe=owe_w, twe=twe_w
        )
        rows.append((int(zeta), report.f_measure))

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "zeta_sweep.tsv", "w", encoding="utf-8") as fh:
            fh.write("zeta\tf_measure\n")
            for z, f in rows:
                fh.write(f"{z}\t{f:.6f}\n")
    return rows


def make_trigger_evaluator(config: PipelineConfig) -> Callable[[Sequence[AlarmEvent], Sequence[AlarmEvent]], float]:
    """Closure for trigger/growth protocols: grids frozen on grid_events.

    evaluate(train_events, grid_events) builds grids and slabs from
    grid_events only, computes channel weights and subgraphs from the first
    80% of train_events, and returns the benchmark F on the last 20%.
    """

    def evaluate(train_events: Sequence[AlarmEvent], grid_events: Sequence[AlarmEvent]) -> float:
        art = Artifacts()
        art.events = sorted(train_events, key=lambda e: e.timestamp)
        art.train, art.test = split_events(art.events)
        _build_grids_and_slabs(art, grid_events, config)
        _compute_channels(art, art.train, config, {"owe", "twe", "mgm"})
        try:
            _, _, report = _cut_and_score(art, config, config.lam, config.beta, art.test)
        except ValueError:
            return 0.0
        return report.f_measure

    return evaluate
