"""Readers and writers for the on-disk artifact formats.

Grids are TSV with split labels on the first row/column and NA for missing
entries; partitions, cubes, generative-model parameters, subgraphs, ground
truth, and reports are JSON; vectors are text with a .ctx sidecar for the
context half; co-occurrence matrices are i/j/count TSV triplets with a
vocabulary sidecar; edges are one TSV row per pair with all channel weights.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .embedding.cooccur import CooccurrenceMatrix
from .embedding.training import WordVectors
from .fusion import EdgeWeights, SubgraphSet
from .grids import SimilarityGrid
from .ingest import FACET_BY_KIND, NtaCube, AlarmEvent, parse_events, write_events
from .mgm import MgmParams
from .slabs import SlabPartition

__all__ = [
    "read_events_file",
    "write_events_file",
    "write_grid_tsv",
    "read_grid_tsv",
    "write_partition_json",
    "read_partition_json",
    "write_cube_json",
    "read_cube_json",
    "write_vectors",
    "read_vectors",
    "write_matrix_tsv",
    "read_matrix_tsv",
    "write_edges_tsv",
    "read_edges_tsv",
    "write_subgraphs_json",
    "read_subgraphs_json",
    "write_params_json",
    "read_params_json",
    "write_ground_truth",
    "read_ground_truth",
    "write_json",
]


def read_events_file(path: str | Path, fmt: str | None = None) -> list[AlarmEvent]:
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix in (".jsonl", ".ndjson") else "csv"
    with open(path, encoding="utf-8") as fh:
        return parse_events(fh, fmt)


def write_events_file(events: list[AlarmEvent], path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix in (".jsonl", ".ndjson") else "csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_events(events, fh, fmt)


def write_grid_tsv(grid: SimilarityGrid, path: str | Path) -> None:
    labels = [str(i) for i in range(grid.size)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join([f"{grid.facet_kind}:{grid.evidence}"] + labels) + "\n")
        for i in range(grid.size):
            cells = [
                "NA" if np.isnan(v) else f"{v:.6f}" for v in grid.matrix[i]
            ]
            fh.write("\t".join([labels[i]] + cells) + "\n")


def read_grid_tsv(path: str | Path) -> SimilarityGrid:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        kind, evidence = header[0].split(":")
        rows = []
        for line in fh:
            cells = line.rstrip("\n").split("\t")[1:]
            rows.append([np.nan if c == "NA" else float(c) for c in cells])
    return SimilarityGrid(kind, evidence, np.asarray(rows))


def write_partition_json(part: SlabPartition, path: str | Path) -> None:
    write_json(
        {
            "facet": part.facet_kind,
            "variant": part.variant,
            "threshold": part.threshold,
            "assignment": list(part.assignment),
        },
        path,
    )


def read_partition_json(path: str | Path) -> SlabPartition:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return SlabPartition(d["facet"], d["variant"], d["threshold"], tuple(d["assignment"]))


def write_cube_json(cube: NtaCube, path: str | Path) -> None:
    write_json(
        {
            "facet": cube.facet.kind,
            "cells": [[n, s, c, v] for (n, s, c), v in sorted(cube.cells.items())],
            "texts": [[n, s, t] for (n, s), t in sorted(cube.texts.items())],
            "node_order": list(cube.node_order),
        },
        path,
    )


def read_cube_json(path: str | Path) -> NtaCube:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    cube = NtaCube(facet=FACET_BY_KIND[d["facet"]])
    cube.cells = {(n, s, c): v for n, s, c, v in d["cells"]}
    cube.texts = {(n, s): t for n, s, t in d["texts"]}
    cube.node_order = tuple(d["node_order"])
    return cube


def write_vectors(vectors: WordVectors, path: str | Path) -> None:
    """Main vectors plus biases; context vectors go to the .ctx sidecar."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for k, word in enumerate(vectors.words):
            vals = " ".join(f"{v:.8f}" for v in vectors.main[k])
            fh.write(f"{word} {vals} {vectors.bias_main[k]:.8f} {vectors.bias_context[k]:.8f}\n")
    with open(path.with_suffix(path.suffix + ".ctx"), "w", encoding="utf-8") as fh:
        for k, word in enumerate(vectors.words):
            vals = " ".join(f"{v:.8f}" for v in vectors.context[k])
            fh.write(f"{word} {vals}\n")


def read_vectors(path: str | Path) -> WordVectors:
    path = Path(path)
    words: list[str] = []
    mains: list[list[float]] = []
    bms: list[float] = []
    bcs: list[float] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            words.append(parts[0])
            mains.append([float(x) for x in parts[1:-2]])
            bms.append(float(parts[-2]))
            bcs.append(float(parts[-1]))
    ctxs: list[list[float]] = []
    with open(path.with_suffix(path.suffix + ".ctx"), encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            ctxs.append([float(x) for x in parts[1:]])
    return WordVectors(
        words,
        np.asarray(mains),
        np.asarray(ctxs),
        np.asarray(bms),
        np.asarray(bcs),
        losses=[0.0],
    )


def write_matrix_tsv(matrix: CooccurrenceMatrix, words: list[str], path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for (i, j), c in sorted(matrix.entries.items()):
            fh.write(f"{i}\t{j}\t{c}\n")
    with open(path.with_suffix(path.suffix + ".vocab"), "w", encoding="utf-8") as fh:
        for w in words:
            fh.write(w + "\n")


def read_matrix_tsv(path: str | Path) -> tuple[CooccurrenceMatrix, list[str]]:
    path = Path(path)
    matrix = CooccurrenceMatrix("global", window_size=1)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            i, j, c = line.split("\t")
            matrix.entries[(int(i), int(j))] = int(c)
    with open(path.with_suffix(path.suffix + ".vocab"), encoding="utf-8") as fh:
        words = [line.rstrip("\n") for line in fh]
    return matrix, words


def write_edges_tsv(weights: EdgeWeights, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("u\tv\tw_owe\tw_twe\tw_mgm\tw_C\n")
        for (u, v), (o, t, m, c) in sorted(weights.records.items()):
            fh.write(f"{u}\t{v}\t{o:.6f}\t{t:.6f}\t{m:.6f}\t{c:.6f}\n")


def read_edges_tsv(path: str | Path) -> EdgeWeights:
    out = EdgeWeights()
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            u, v, o, t, m, c = line.rstrip("\n").split("\t")
            out.records[(u, v)] = (float(o), float(t), float(m), float(c))
    return out


def write_subgraphs_json(subgraphs: SubgraphSet, path: str | Path) -> None:
    groups = subgraphs.membership()
    edges_by_group: dict[int, list] = {}
    for (u, v, w) in subgraphs.edges:
        edges_by_group.setdefault(groups[u], []).append([u, v, w])
    payload = [
        {"nodes": sg, "edges": sorted(edges_by_group.get(k, []))}
        for k, sg in enumerate(subgraphs.subgraphs)
    ]
    write_json(payload, path)


def read_subgraphs_json(path: str | Path) -> SubgraphSet:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    subgraphs = [list(d["nodes"]) for d in payload]
    edges = [(u, v, w) for d in payload for (u, v, w) in d["edges"]]
    return SubgraphSet(subgraphs, edges)


def write_params_json(params: MgmParams, path: str | Path) -> None:
    tables = []
    for level_table in params.tables:
        tables.append(
            {
                ",".join(map(str, ctx)): [float(x) for x in row]
                for ctx, row in sorted(level_table.items())
            }
        )
    write_json(
        {
            "theta": params.theta,
            "smoothing": params.smoothing,
            "facet_order": list(params.facet_order),
            "slab_counts": list(params.slab_counts),
            "tables": tables,
        },
        path,
    )


def read_params_json(path: str | Path) -> MgmParams:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    tables = []
    for level_table in d["tables"]:
        tables.append(
            {
                tuple(int(x) for x in ctx.split(",") if x != ""): np.asarray(row)
                for ctx, row in level_table.items()
            }
        )
    return MgmParams(
        d["theta"],
        tuple(d["facet_order"]),
        tuple(d["slab_counts"]),
        tables,
        d["smoothing"],
    )


def write_ground_truth(subgraphs: list[list[str]], path: str | Path) -> None:
    write_json([sorted(sg) for sg in subgraphs], path)


def read_ground_truth(path: str | Path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(payload, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
