"""Word embeddings over global and slab-scoped co-occurrence evidence."""

from .cooccur import CooccurrenceMatrix, SlabCooccurrences, Vocabulary, build_cooccurrence
from .coefficients import conditional_affinity, cutoff, f_con, f_dep, rho
from .training import (
    EmbeddingConfig,
    WordVectors,
    regression_grad,
    regression_loss,
    train_owe,
    train_twe,
    twe_work_units,
)
from .semantics import NodeSemantics, expand_representation, node_pair_weight

__all__ = [
    "CooccurrenceMatrix",
    "SlabCooccurrences",
    "Vocabulary",
    "build_cooccurrence",
    "cutoff",
    "rho",
    "f_con",
    "f_dep",
    "conditional_affinity",
    "EmbeddingConfig",
    "WordVectors",
    "train_owe",
    "train_twe",
    "regression_loss",
    "regression_grad",
    "twe_work_units",
    "NodeSemantics",
    "expand_representation",
    "node_pair_weight",
]
