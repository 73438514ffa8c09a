"""Baseline: a small MLP on the six standardized statistical features."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ggd.detectors.common import DetectorConfig, as_graphs, check_both_labels, check_finite, label_from_scores
from ggd.graph import Corpus, Graph
from ggd.nn.core import MLP
from ggd.nn.losses import cross_entropy_batch, softmax
from ggd.nn.optim import AdamState, adam_step
from ggd.seeding import derive_seed
from ggd.stats import FEATURE_NAMES, FeatureScaler, feature_matrix

log = logging.getLogger(__name__)


@dataclass
class FeatureModel:
    params: dict
    config: DetectorConfig
    scaler: FeatureScaler
    training_log: list = field(default_factory=list)
    kind = "feature"

    @property
    def mlp(self):
        return MLP("mlp", [len(FEATURE_NAMES), self.config.feature_hidden, 2])

    def posteriors(self, graphs) -> np.ndarray:
        x = self.scaler.transform(feature_matrix(as_graphs(graphs)))
        logits, _ = self.mlp.forward(self.params, x)
        return softmax(logits)

    def predict(self, graphs) -> np.ndarray:
        p = self.posteriors(graphs)
        return label_from_scores(p[:, 1], p[:, 0])


def train_feature_classifier(train: Corpus, config: DetectorConfig | None = None) -> FeatureModel:
    config = config or DetectorConfig()
    labels = train.labels()
    check_both_labels(labels)
    raw = feature_matrix(train)
    scaler = FeatureScaler.fit(raw)  # train split only
    x = scaler.transform(raw)
    rng = np.random.default_rng(derive_seed(config.seed, "feature", "init"))
    model = FeatureModel({}, config, scaler)
    mlp = model.mlp
    mlp.init(model.params, rng)
    state = AdamState(lr=config.lr)
    for epoch in range(config.epochs):
        order = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            logits, caches = mlp.forward(model.params, x[idx])
            lv = cross_entropy_batch(logits, labels[idx])
            check_finite(lv.loss, epoch, "feature")
            grads: dict = {}
            mlp.backward(model.params, caches, lv.grad, grads)
            adam_step(state, model.params, grads)
            total += lv.loss * len(idx)
        model.training_log.append(total / len(x))
    return model


def predict_feature(model: FeatureModel, g: Graph):
    """``(label, (p_generated, p_real))`` for one graph."""
    p = model.posteriors([g])[0]
    return int(label_from_scores(p[1], p[0])), (float(p[0]), float(p[1]))
