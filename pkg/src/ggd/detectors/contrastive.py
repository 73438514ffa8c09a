"""Contrastive encoder pre-training plus a hinge-loss linear classifier.

The encoder never sees labels: ``train_contrastive_encoder`` takes bare graphs.
Labels enter only in ``train_linear_classifier`` on frozen embeddings.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ggd.detectors.augment import NODE_DROP, POOL, augment
from ggd.detectors.common import (
    EMBED_DIM, GENERATED, REAL, DetectorConfig, as_graphs, batch_inputs, check_both_labels,
    check_finite, encode_graphs,
)
from ggd.errors import ArgumentError
from ggd.graph import Corpus, Graph
from ggd.nn.core import MLP
from ggd.nn.losses import hinge_batch, nt_xent
from ggd.nn.optim import AdamState, adam_step
from ggd.seeding import derive_seed

log = logging.getLogger(__name__)


@dataclass
class LinearClassifier:
    w: np.ndarray
    b: float

    def score(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.w + self.b

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Sign of the score; zero counts as real."""
        return np.where(self.score(x) >= 0.0, REAL, GENERATED)


def train_linear_classifier(embeddings, labels, lam: float = 1e-4, epochs: int = 500,
                            lr: float = 0.01, seed: int = 0) -> LinearClassifier:
    """Full-batch Adam on mean hinge loss + ``lam * |w|^2``. Labels are 1 (real) / 0 (generated)."""
    x = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    check_both_labels(labels)
    y = np.where(labels == REAL, 1.0, -1.0)
    rng = np.random.default_rng(derive_seed(seed, "svm", "init"))
    params = {"w": rng.normal(scale=0.01, size=x.shape[1]), "b": np.zeros(1)}
    state = AdamState(lr=lr)
    for _ in range(epochs):
        s = x @ params["w"] + params["b"][0]
        lv = hinge_batch(s, y)
        grads = {"w": x.T @ lv.grad + 2.0 * lam * params["w"], "b": np.array([lv.grad.sum()])}
        adam_step(state, params, grads)
    return LinearClassifier(params["w"].copy(), float(params["b"][0]))


@dataclass
class ContrastiveModel:
    params: dict
    config: DetectorConfig
    classifier: LinearClassifier | None = None
    training_log: list = field(default_factory=list)
    kind = "contrastive"

    @property
    def encoder(self):
        return self.config.encoder()

    @property
    def projection(self):
        return MLP("proj", [EMBED_DIM, EMBED_DIM, EMBED_DIM])

    def embed(self, graphs) -> np.ndarray:
        enc_params = {k: v for k, v in self.params.items() if k.startswith("enc.")}
        return encode_graphs(self.encoder, enc_params, as_graphs(graphs), self.config.featurizer)

    def scores(self, graphs) -> np.ndarray:
        if self.classifier is None:
            raise ArgumentError("contrastive model has no classifier yet")
        return self.classifier.score(self.embed(graphs))

    def predict(self, graphs) -> np.ndarray:
        return np.where(self.scores(graphs) >= 0.0, REAL, GENERATED)


def _views(graphs, ratio, rng):
    v1 = [augment(g, NODE_DROP, ratio, rng) for g in graphs]
    kinds = rng.integers(len(POOL), size=len(graphs))
    v2 = [augment(g, POOL[k], ratio, rng) for g, k in zip(graphs, kinds)]
    return v1, v2


def _contrastive_step(model: ContrastiveModel, v1, v2):
    enc, proj = model.encoder, model.projection
    n = len(v1)
    batch, x = batch_inputs(v1 + v2, model.config.featurizer)
    emb, caches = enc.forward(model.params, batch, x)
    z, pc = proj.forward(model.params, emb)
    lv = nt_xent(z[:n], z[n:], model.config.tau)
    grads: dict = {}
    demb = proj.backward(model.params, pc, np.vstack(lv.grad), grads)
    enc.backward(model.params, batch, caches, demb, grads)
    return lv.loss, grads


def train_contrastive_encoder(train_graphs, config: DetectorConfig | None = None) -> ContrastiveModel:
    """Self-supervised encoder training; accepts graphs only, never labels."""
    config = config or DetectorConfig()
    graphs = [g for g in as_graphs(train_graphs)]
    if any(not isinstance(g, Graph) for g in graphs):
        raise ArgumentError("train_contrastive_encoder takes bare graphs")
    if len(graphs) < 2:
        raise ArgumentError("contrastive training needs at least two graphs")
    if config.batch_size < 2:
        raise ArgumentError("contrastive mini-batches need N >= 2")
    rng = np.random.default_rng(derive_seed(config.seed, "contrastive", "init"))
    model = ContrastiveModel({}, config)
    model.encoder.init(model.params, rng)
    model.projection.init(model.params, rng)
    state = AdamState(lr=config.lr)
    for epoch in range(config.epochs):
        order = rng.permutation(len(graphs))
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            if len(idx) < 2:
                log.warning("skipping contrastive mini-batch of size %d", len(idx))
                continue
            v1, v2 = _views([graphs[i] for i in idx], config.aug_ratio, rng)
            loss, grads = _contrastive_step(model, v1, v2)
            check_finite(loss, epoch, "contrastive")
            adam_step(state, model.params, grads)
            total += loss * len(idx)
            count += len(idx)
        model.training_log.append(total / max(count, 1))
        log.debug("contrastive epoch %d loss %.5f", epoch, model.training_log[-1])
    return model


def train_contrastive(train: Corpus, config: DetectorConfig | None = None) -> ContrastiveModel:
    config = config or DetectorConfig()
    check_both_labels(train.labels())
    model = train_contrastive_encoder(train.graphs, config)
    model.classifier = train_linear_classifier(model.embed(train.graphs), train.labels(), config.svm_lambda,
                                               config.svm_epochs, config.svm_lr, config.seed)
    return model
