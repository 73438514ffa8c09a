from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ggd.errors import ArgumentError
from ggd.graph import Corpus

KINDS = ("ER", "BA", "WS", "VGAE", "Graphite", "GraphRNN_S")
NEURAL_KINDS = ("VGAE", "Graphite", "GraphRNN_S")

# allowed parameter keys per kind; everything else is rejected up front
PARAM_KEYS = {
    "ER": {"edge_prob", "edge_count", "n"},
    "BA": {"m", "n"},
    "WS": {"k", "beta", "n"},
    "VGAE": {"latent_dim", "hidden_dim", "epochs", "lr", "batch_size", "max_degree_bucket"},
    "Graphite": {"latent_dim", "hidden_dim", "epochs", "lr", "batch_size", "max_degree_bucket", "rounds"},
    "GraphRNN_S": {"hidden_dim", "epochs", "lr", "batch_size", "bfs_orders"},
}


@dataclass(frozen=True)
class GeneratorSpec:
    id: str
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - PARAM_KEYS[self.kind]
        if unknown:
            raise ArgumentError(f"{self.kind} does not accept parameters {sorted(unknown)}")
        if not self.id:
            raise ArgumentError("generator id must be non-empty")

    @property
    def neural(self) -> bool:
        return self.kind in NEURAL_KINDS

    def to_dict(self):
        return {"id": self.id, "kind": self.kind, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        try:
            return cls(str(d["id"]), str(d["kind"]), dict(d.get("params", {})), int(d.get("seed", 0)))
        except KeyError as exc:
            raise ArgumentError(f"generator spec is missing {exc}") from None


@dataclass(frozen=True)
class NodeCountSampler:
    """Empirical node-count distribution of a reference corpus."""

    values: tuple[int, ...]
    probs: tuple[float, ...]

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "NodeCountSampler":
        if len(corpus) == 0:
            raise ArgumentError("cannot fit a node-count sampler to an empty corpus")
        vals, counts = np.unique([g.n for g in corpus.graphs], return_counts=True)
        return cls(tuple(int(v) for v in vals), tuple(float(c) / counts.sum() for c in counts))

    @classmethod
    def constant(cls, n: int) -> "NodeCountSampler":
        return cls((int(n),), (1.0,))

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.values[rng.choice(len(self.values), p=np.asarray(self.probs))])

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def to_dict(self):
        return {"values": list(self.values), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(int(v) for v in d["values"]), tuple(float(p) for p in d["probs"]))


@dataclass
class TrainedGenerator:
    spec: GeneratorSpec
    parameters: dict
    node_sampler: NodeCountSampler
    training_log: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
