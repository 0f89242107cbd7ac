"""Temporal-textual correlation weights and greedy subgraph extraction for
propagation networks.

The toolkit ingests timestamped, text-annotated alarm events, scores every
node pair through three channels (a global word embedding, a time-aware
slab-based embedding, and a multifacet generative model), fuses the channels
into a coherence-weighted bilateral network, cuts it greedily into tightly
connected subgraphs, and benchmarks the result against held-out events.
"""

from . import embedding, evaluation, fusion, grids, ingest, mgm, slabs, synthetic

__all__ = [
    "embedding",
    "evaluation",
    "fusion",
    "grids",
    "ingest",
    "mgm",
    "slabs",
    "synthetic",
]

__version__ = "0.1.0"
