from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ggd.graph import Graph, degree_sequence


@dataclass(frozen=True)
class NodeFeaturizer:
    """Degree one-hot node features; degrees above ``max_degree_bucket`` share the last column."""

    mode: str = "DegreeOneHot"
    max_degree_bucket: int = 31

    @property
    def width(self) -> int:
        return self.max_degree_bucket + 1

    def from_degrees(self, degrees) -> np.ndarray:
        d = np.minimum(np.asarray(degrees, dtype=np.int64), self.max_degree_bucket)
        x = np.zeros((len(d), self.width))
        x[np.arange(len(d)), d] = 1.0
        return x

    def to_dict(self):
        return {"mode": self.mode, "max_degree_bucket": self.max_degree_bucket}


def node_features(g: Graph, featurizer: NodeFeaturizer = NodeFeaturizer()) -> np.ndarray:
    return featurizer.from_degrees(degree_sequence(g))
