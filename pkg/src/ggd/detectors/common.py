from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ggd.detectors.featurize import NodeFeaturizer
from ggd.errors import ArgumentError, TrainError
from ggd.graph import Corpus
from ggd.nn.core import GcnStack, GraphBatch

log = logging.getLogger(__name__)

EMBED_DIM = 128
REAL, GENERATED = 1, 0


@dataclass
class DetectorConfig:
    """Training knobs shared by every detector; each model reads the fields it needs."""

    epochs: int = 200
    lr: float = 0.001
    batch_size: int = 32
    hidden_dims: list = field(default_factory=lambda: [128, 128, 128])
    max_degree_bucket: int = 31
    seed: int = 0
    # contrastive
    tau: float = 0.5
    aug_ratio: float = 0.2
    svm_lambda: float = 1e-4
    svm_epochs: int = 500
    svm_lr: float = 0.01
    # metric
    n_ps: int = 20000
    n_k: int = 10
    pair_batch: int = 64
    # feature baseline
    feature_hidden: int = 32

    @classmethod
    def from_dict(cls, d: dict | None) -> "DetectorConfig":
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ArgumentError(f"unknown detector config keys {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    @property
    def featurizer(self) -> NodeFeaturizer:
        return NodeFeaturizer(max_degree_bucket=self.max_degree_bucket)

    def encoder(self, prefix: str = "enc") -> GcnStack:
        return GcnStack(prefix, [self.max_degree_bucket + 1, *self.hidden_dims, EMBED_DIM])


def check_both_labels(labels) -> None:
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise TrainError("training data holds a single class")


def check_finite(loss: float, epoch: int, what: str) -> None:
    if not np.isfinite(loss):
        raise TrainError(f"{what} loss is not finite", epoch)


def batch_inputs(graphs, featurizer: NodeFeaturizer):
    batch = GraphBatch.from_graphs(graphs)
    return batch, featurizer.from_degrees(batch.degrees)


def encode_graphs(encoder: GcnStack, params: dict, graphs, featurizer: NodeFeaturizer,
                  chunk: int = 256) -> np.ndarray:
    graphs = list(graphs)
    if not graphs:
        return np.zeros((0, encoder.dims[-1]))
    out = []
    for start in range(0, len(graphs), chunk):
        batch, x = batch_inputs(graphs[start:start + chunk], featurizer)
        emb, _ = encoder.forward(params, batch, x)
        out.append(emb)
    return np.vstack(out)


def as_graphs(data):
    if isinstance(data, Corpus):
        return data.graphs
    return list(data)


def label_from_scores(p_real, p_generated) -> np.ndarray:
    """1 (real) unless the generated score is strictly larger."""
    return np.where(np.asarray(p_generated) > np.asarray(p_real), GENERATED, REAL)
