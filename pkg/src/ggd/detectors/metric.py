"""Siamese metric model.

Both graphs of a pair go through one shared GCN encoder; the head maps the
element-wise absolute difference of the two embeddings through a linear layer
and a sigmoid to the probability that the pair shares a label. Single graphs
are classified by averaging that probability against ``n_k`` references of
each label and taking the larger mean.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ggd.detectors.common import (
    EMBED_DIM, GENERATED, REAL, DetectorConfig, as_graphs, batch_inputs, check_finite, encode_graphs,
    label_from_scores,
)
from ggd.errors import ArgumentError, PairError
from ggd.graph import Corpus, Graph, LabeledGraph
from ggd.nn.core import glorot, sigmoid
from ggd.nn.losses import bce_with_logits
from ggd.nn.optim import AdamState, adam_step
from ggd.seeding import derive_seed

log = logging.getLogger(__name__)


def authenticity_key(item: LabeledGraph):
    return REAL if item.is_real else GENERATED


def generator_key(item: LabeledGraph):
    return item.generator_id


def sample_pair_indices(keys, n_ps: int, seed: int):
    """Index pairs ``(a, b, same)``: ``n_ps`` same-key pairs then ``n_ps`` cross-key pairs.

    Same-key pairs pick a key uniformly, then two distinct members of it;
    cross-key pairs pick two distinct keys uniformly, then one member of each.
    """
    keys = list(keys)
    groups: dict = {}
    for i, k in enumerate(keys):
        groups.setdefault(k, []).append(i)
    names = sorted(groups, key=str)
    if len(names) < 2:
        raise PairError("pair sampling needs at least two labels")
    small = [k for k in names if len(groups[k]) < 2]
    if small:
        raise PairError(f"labels {small} have fewer than two graphs")
    rng = np.random.default_rng(derive_seed(seed, "pairs"))
    members = [np.asarray(groups[k]) for k in names]
    a = np.empty(2 * n_ps, dtype=np.int64)
    b = np.empty(2 * n_ps, dtype=np.int64)
    for t in range(n_ps):
        grp = members[rng.integers(len(members))]
        i, j = rng.choice(len(grp), size=2, replace=False)
        a[t], b[t] = grp[i], grp[j]
    for t in range(n_ps, 2 * n_ps):
        ki, kj = rng.choice(len(members), size=2, replace=False)
        a[t] = members[ki][rng.integers(len(members[ki]))]
        b[t] = members[kj][rng.integers(len(members[kj]))]
    same = np.concatenate([np.ones(n_ps, dtype=np.int64), np.zeros(n_ps, dtype=np.int64)])
    return a, b, same


def sample_pairs(train: Corpus, n_ps: int, seed: int, key=authenticity_key):
    """``2 * n_ps`` triples ``(item_a, item_b, same_label)``."""
    a, b, same = sample_pair_indices([key(it) for it in train], n_ps, seed)
    items = train.items
    return [(items[i], items[j], int(s)) for i, j, s in zip(a, b, same)]


@dataclass
class MetricModel:
    params: dict
    config: DetectorConfig
    references: Corpus | None = None
    mode: str = "authenticity"
    training_log: list = field(default_factory=list)
    kind = "metric"

    @property
    def encoder(self):
        return self.config.encoder()

    @property
    def n_k(self) -> int:
        return self.config.n_k

    def embed(self, graphs) -> np.ndarray:
        return encode_graphs(self.encoder, self.params, as_graphs(graphs), self.config.featurizer)

    def pair_logits(self, ha: np.ndarray, hb: np.ndarray) -> np.ndarray:
        # row-wise reduction, so a pair scores the same bits alone or in a batch
        return (np.abs(ha - hb) * self.params["head.w"]).sum(axis=-1) + self.params["head.b"][0]

    def pair_posteriors(self, ha: np.ndarray, hb: np.ndarray) -> np.ndarray:
        return sigmoid(self.pair_logits(ha, hb))

    def posterior(self, g1: Graph, g2: Graph) -> float:
        h = self.embed([g1, g2])
        return float(self.pair_posteriors(h[:1], h[1:])[0])

    def predict(self, graphs, references: Corpus | None = None, n_k: int | None = None,
                seed: int | None = None) -> np.ndarray:
        labels, _ = metric_predict_many(self, graphs, references, n_k, seed)
        return labels


def init_metric(config: DetectorConfig) -> MetricModel:
    rng = np.random.default_rng(derive_seed(config.seed, "metric", "init"))
    model = MetricModel({}, config)
    model.encoder.init(model.params, rng)
    model.params["head.w"] = glorot(rng, EMBED_DIM, 1)[:, 0]
    model.params["head.b"] = np.zeros(1)
    return model


def _pair_step(model: MetricModel, graphs, a, b, y):
    enc = model.encoder
    batch, x = batch_inputs(graphs, model.config.featurizer)
    emb, caches = enc.forward(model.params, batch, x)
    diff = emb[a] - emb[b]
    d = np.abs(diff)
    logits = d @ model.params["head.w"] + model.params["head.b"][0]
    lv = bce_with_logits(logits, y)
    grads = {"head.w": d.T @ lv.grad, "head.b": np.array([lv.grad.sum()])}
    dd = np.outer(lv.grad, model.params["head.w"]) * np.sign(diff)
    demb = np.zeros_like(emb)
    np.add.at(demb, a, dd)
    np.add.at(demb, b, -dd)
    enc.backward(model.params, batch, caches, demb, grads)
    return lv.loss, grads


def train_siamese(pairs, config: DetectorConfig | None = None, mode: str = "authenticity") -> MetricModel:
    """Train on ``(graph_a, graph_b, same)`` triples; graphs may be bare or labelled."""
    config = config or DetectorConfig()
    if not pairs:
        raise ArgumentError("train_siamese needs at least one pair")
    index: dict = {}
    graphs: list = []

    def slot(obj):
        g = obj.graph if isinstance(obj, LabeledGraph) else obj
        k = id(obj)
        if k not in index:
            index[k] = len(graphs)
            graphs.append(g)
        return index[k]

    a = np.array([slot(p[0]) for p in pairs])
    b = np.array([slot(p[1]) for p in pairs])
    y = np.array([float(p[2]) for p in pairs])
    return fit_pairs(graphs, a, b, y, config, mode)


def fit_pairs(graphs, a, b, y, config: DetectorConfig, mode: str) -> MetricModel:
    model = init_metric(config)
    model.mode = mode
    rng = np.random.default_rng(derive_seed(config.seed, "metric", "order"))
    state = AdamState(lr=config.lr)
    for epoch in range(config.epochs):
        order = rng.permutation(len(a))
        total = 0.0
        for start in range(0, len(order), config.pair_batch):
            sel = order[start:start + config.pair_batch]
            used, inverse = np.unique(np.concatenate([a[sel], b[sel]]), return_inverse=True)
            loss, grads = _pair_step(model, [graphs[i] for i in used], inverse[:len(sel)],
                                     inverse[len(sel):], y[sel])
            check_finite(loss, epoch, "siamese")
            adam_step(state, model.params, grads)
            total += loss * len(sel)
        model.training_log.append(total / len(a))
        log.debug("siamese epoch %d loss %.5f", epoch, model.training_log[-1])
    return model


def train_metric(train: Corpus, config: DetectorConfig | None = None) -> MetricModel:
    """Sample ``n_ps`` + ``n_ps`` pairs from ``train``, fit the siamese net, keep ``train`` as references."""
    config = config or DetectorConfig()
    a, b, same = sample_pair_indices([authenticity_key(it) for it in train], config.n_ps,
                                     derive_seed(config.seed, "metric"))
    model = fit_pairs(train.graphs, a, b, same.astype(np.float64), config, "authenticity")
    model.references = train
    return model


def _reference_pools(references: Corpus):
    labels = references.labels()
    return {REAL: np.flatnonzero(labels == REAL), GENERATED: np.flatnonzero(labels == GENERATED)}


def choose_references(pools: dict, n_k: int, seed: int, position: int) -> dict:
    """Sorted indices of ``n_k`` references per label for the test item at ``position``."""
    rng = np.random.default_rng(derive_seed(seed, "metric-refs", position))
    return {lab: np.sort(rng.choice(pool, size=n_k, replace=False)) for lab, pool in sorted(pools.items())}


def metric_predict_many(model: MetricModel, graphs, references: Corpus | None = None,
                        n_k: int | None = None, seed: int | None = None):
    """Labels and ``(B, 2)`` mean posteriors ordered ``[generated, real]``."""
    references = references if references is not None else model.references
    if references is None:
        raise ArgumentError("metric prediction needs reference graphs")
    n_k = model.config.n_k if n_k is None else int(n_k)
    seed = model.config.seed if seed is None else seed
    pools = _reference_pools(references)
    if n_k < 1 or any(len(p) < n_k for p in pools.values()):
        raise ArgumentError(f"references need at least n_k={n_k} graphs of each label")
    graphs = as_graphs(graphs)
    ref_emb = model.embed(references.graphs)
    emb = model.embed(graphs)
    means = np.zeros((len(graphs), 2))
    for i in range(len(graphs)):
        chosen = choose_references(pools, n_k, seed, i)
        for lab, idx in chosen.items():
            p = model.pair_posteriors(np.repeat(emb[i:i + 1], len(idx), axis=0), ref_emb[idx])
            means[i, lab] = p.mean()
    return label_from_scores(means[:, REAL], means[:, GENERATED]), means


def metric_predict(model: MetricModel, g: Graph, references: Corpus | None = None,
                   n_k: int | None = None, seed: int | None = None):
    """``(label, (mean_generated, mean_real))`` for one graph."""
    labels, means = metric_predict_many(model, [g], references, n_k, seed)
    return int(labels[0]), (float(means[0, GENERATED]), float(means[0, REAL]))


def attribution_predict(model: MetricModel, g1: Graph, g2: Graph) -> float:
    """Probability that ``g1`` and ``g2`` come from the same generator."""
    return model.posterior(g1, g2)


def train_attribution(fakes: Corpus, config: DetectorConfig | None = None) -> MetricModel:
    config = config or DetectorConfig()
    a, b, same = sample_pair_indices([generator_key(it) for it in fakes], config.n_ps,
                                     derive_seed(config.seed, "attribution"))
    return fit_pairs(fakes.graphs, a, b, same.astype(np.float64), config, "attribution")
