"""Generated-graph detectors.

Three GCN-based models (end-to-end classifier, contrastive encoder + linear
classifier, siamese metric model) and a statistical-feature MLP baseline.
Labels follow ``1 = real``, ``0 = generated`` throughout.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from ggd.detectors.augment import EDGE_PERTURB, NODE_DROP, POOL, SUBGRAPH, augment
from ggd.detectors.common import EMBED_DIM, GENERATED, REAL, DetectorConfig
from ggd.detectors.contrastive import (
    ContrastiveModel, LinearClassifier, train_contrastive, train_contrastive_encoder, train_linear_classifier,
)
from ggd.detectors.end_to_end import EndToEndModel, predict_end_to_end, train_end_to_end
from ggd.detectors.feature import FeatureModel, predict_feature, train_feature_classifier
from ggd.detectors.featurize import NodeFeaturizer, node_features
from ggd.detectors.metric import (
    MetricModel, attribution_predict, metric_predict, metric_predict_many, sample_pairs, train_attribution,
    train_metric, train_siamese,
)
from ggd.errors import ArgumentError
from ggd.graph import Corpus, atomic_write_text, graph_to_record, record_to_graph
from ggd.nn.serialize import load_bundle, save_bundle
from ggd.stats import FeatureScaler

MODEL_KINDS = ("e2e", "contrastive", "metric", "feature")

__all__ = [
    "ContrastiveModel", "DetectorConfig", "EDGE_PERTURB", "EMBED_DIM", "EndToEndModel", "FeatureModel",
    "GENERATED", "LinearClassifier", "MODEL_KINDS", "MetricModel", "NODE_DROP", "NodeFeaturizer", "POOL",
    "REAL", "SUBGRAPH", "attribution_predict", "augment", "embeddings_csv", "export_embeddings",
    "load_detector", "metric_predict", "metric_predict_many", "node_features", "predict_corpus",
    "predict_end_to_end", "predict_feature", "sample_pairs", "save_detector", "train_attribution",
    "train_contrastive", "train_contrastive_encoder", "train_detector", "train_end_to_end",
    "train_feature_classifier", "train_linear_classifier", "train_metric", "train_siamese",
]

_TRAINERS = {
    "e2e": train_end_to_end,
    "contrastive": train_contrastive,
    "metric": train_metric,
    "feature": train_feature_classifier,
}


def train_detector(kind: str, train: Corpus, config: DetectorConfig | None = None):
    if kind not in _TRAINERS:
        raise ArgumentError(f"unknown model {kind!r}; expected one of {MODEL_KINDS}")
    return _TRAINERS[kind](train, config or DetectorConfig())


def predict_corpus(model, graphs) -> np.ndarray:
    """Labels for every graph; the metric model uses its stored references."""
    return np.asarray(model.predict(graphs), dtype=np.int64)


def graph_id(item) -> str:
    return f"{item.dataset_id}:{item.generator_id or 'real'}:{item.index}"


def export_embeddings(model, corpus: Corpus):
    """Rows ``(graph_id, dataset, authenticity, generator, vector)`` with the 128-dim pre-classifier embedding."""
    if isinstance(model, FeatureModel):
        raise ArgumentError("the feature baseline has no graph embedding")
    emb = model.embed(corpus.graphs)
    return [(graph_id(it), it.dataset_id, it.authenticity.value, it.generator_id or "", emb[i])
            for i, it in enumerate(corpus)]


def embeddings_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["graph_id", "dataset", "authenticity", "generator"] + [f"e{i}" for i in range(EMBED_DIM)])
    for gid, ds, auth, gen, vec in rows:
        w.writerow([gid, ds, auth, gen] + [repr(float(v)) for v in vec])
    return buf.getvalue()


def write_embeddings(model, corpus: Corpus, path) -> None:
    atomic_write_text(path, embeddings_csv(export_embeddings(model, corpus)))


# -- persistence ---------------------------------------------------------------

def save_detector(path, model) -> None:
    params = dict(model.params)
    meta = {"kind": model.kind, "config": model.config.to_dict(), "training_log": list(model.training_log)}
    if isinstance(model, ContrastiveModel) and model.classifier is not None:
        params["svm.w"] = model.classifier.w
        params["svm.b"] = np.array([model.classifier.b])
    elif isinstance(model, FeatureModel):
        params["scaler.mean"] = model.scaler.mean
        params["scaler.std"] = model.scaler.std
    elif isinstance(model, MetricModel):
        meta["mode"] = model.mode
        meta["references"] = None if model.references is None else \
            [graph_to_record(it) for it in model.references]
    save_bundle(path, params, meta, dtype="<f8")


def load_detector(path):
    params, meta = load_bundle(path)
    kind = meta.get("kind")
    if kind not in MODEL_KINDS:
        raise ArgumentError(f"{path} does not hold a detector")
    config = DetectorConfig.from_dict(meta["config"])
    log_ = list(meta.get("training_log", []))
    if kind == "e2e":
        return EndToEndModel(params, config, log_)
    if kind == "contrastive":
        clf = None
        if "svm.w" in params:
            clf = LinearClassifier(params.pop("svm.w"), float(params.pop("svm.b")[0]))
        return ContrastiveModel(params, config, clf, log_)
    if kind == "feature":
        scaler = FeatureScaler(params.pop("scaler.mean"), params.pop("scaler.std"))
        return FeatureModel(params, config, scaler, log_)
    refs = meta.get("references")
    corpus = None if refs is None else Corpus(tuple(record_to_graph(r, i) for i, r in enumerate(refs)), 0)
    return MetricModel(params, config, corpus, meta.get("mode", "authenticity"), log_)
