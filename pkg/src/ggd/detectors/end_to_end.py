"""End-to-end GCN classifier: four GCN layers, mean pooling, one linear layer."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ggd.detectors.common import (
    EMBED_DIM, DetectorConfig, as_graphs, batch_inputs, check_both_labels, check_finite,
    encode_graphs, label_from_scores,
)
from ggd.graph import Corpus, Graph
from ggd.nn.core import Dense
from ggd.nn.losses import cross_entropy_batch, softmax
from ggd.nn.optim import AdamState, adam_step
from ggd.seeding import derive_seed

log = logging.getLogger(__name__)


@dataclass
class EndToEndModel:
    params: dict
    config: DetectorConfig
    training_log: list = field(default_factory=list)
    kind = "e2e"

    @property
    def encoder(self):
        return self.config.encoder()

    @property
    def head(self):
        return Dense("cls", EMBED_DIM, 2)

    def embed(self, graphs) -> np.ndarray:
        return encode_graphs(self.encoder, self.params, as_graphs(graphs), self.config.featurizer)

    def posteriors(self, graphs) -> np.ndarray:
        """(B, 2) softmax rows ordered ``[generated, real]``."""
        emb = self.embed(graphs)
        logits, _ = self.head.forward(self.params, emb)
        return softmax(logits)

    def predict(self, graphs) -> np.ndarray:
        p = self.posteriors(graphs)
        return label_from_scores(p[:, 1], p[:, 0])


def _step(model: EndToEndModel, graphs, labels):
    enc, head = model.encoder, model.head
    batch, x = batch_inputs(graphs, model.config.featurizer)
    emb, caches = enc.forward(model.params, batch, x)
    logits, hc = head.forward(model.params, emb)
    lv = cross_entropy_batch(logits, labels)
    grads: dict = {}
    demb = head.backward(model.params, hc, lv.grad, grads)
    enc.backward(model.params, batch, caches, demb, grads)
    return lv.loss, grads


def init_end_to_end(config: DetectorConfig) -> EndToEndModel:
    rng = np.random.default_rng(derive_seed(config.seed, "e2e", "init"))
    model = EndToEndModel({}, config)
    model.encoder.init(model.params, rng)
    model.head.init(model.params, rng)
    return model


def train_end_to_end(train: Corpus, config: DetectorConfig | None = None) -> EndToEndModel:
    config = config or DetectorConfig()
    labels = train.labels()
    check_both_labels(labels)
    model = init_end_to_end(config)
    graphs = train.graphs
    rng = np.random.default_rng(derive_seed(config.seed, "e2e", "order"))
    state = AdamState(lr=config.lr)
    for epoch in range(config.epochs):
        order = rng.permutation(len(graphs))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = _step(model, [graphs[i] for i in idx], labels[idx])
            check_finite(loss, epoch, "end-to-end")
            adam_step(state, model.params, grads)
            total += loss * len(idx)
        model.training_log.append(total / len(graphs))
        log.debug("e2e epoch %d loss %.5f", epoch, model.training_log[-1])
    return model


def predict_end_to_end(model: EndToEndModel, g: Graph):
    """``(label, (p_generated, p_real))`` for one graph; ties go to real."""
    p = model.posteriors([g])[0]
    return int(label_from_scores(p[1], p[0])), (float(p[0]), float(p[1]))
