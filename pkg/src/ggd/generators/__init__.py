"""Graph generators: traditional random models and trainable neural ones.

``fit_generator`` turns a :class:`GeneratorSpec` plus a reference corpus into a
:class:`TrainedGenerator`; ``sample`` draws a labelled corpus from it. For the
traditional kinds "fitting" only estimates missing parameters from the
reference (mean density for ER, edges per node for BA, mean degree for WS).
"""
from __future__ import annotations

import numpy as np

from ggd.errors import ArgumentError
from ggd.generators.autoencoder import edge_probabilities, fit_autoencoder, sample_autoencoder
from ggd.generators.base import GeneratorSpec, KINDS, NodeCountSampler, TrainedGenerator
from ggd.generators.graphrnn import fit_graphrnn_s, sample_graphrnn_s
from ggd.generators.traditional import ba_generate, er_generate, ws_generate
from ggd.graph import Authenticity, Corpus, Graph, LabeledGraph
from ggd.nn.serialize import load_bundle, save_bundle
from ggd.seeding import derive_seed

__all__ = [
    "GeneratorSpec", "KINDS", "NodeCountSampler", "TrainedGenerator", "ba_generate",
    "edge_probabilities", "er_generate", "fit_generator", "fit_vgae", "fit_graphite",
    "fit_graphrnn_s", "load_generator", "sample", "sample_vgae", "sample_graphite",
    "sample_graphrnn_s", "save_generator", "ws_generate",
]


def _fit_traditional(spec: GeneratorSpec, real: Corpus | None) -> TrainedGenerator:
    p = spec.params
    if "n" in p:
        sampler = NodeCountSampler.constant(int(p["n"]))
    elif real is not None and len(real):
        sampler = NodeCountSampler.from_corpus(real)
    else:
        raise ArgumentError(f"{spec.id}: give params.n or a reference corpus")
    meta = {}
    graphs = real.graphs if real is not None else []
    if spec.kind == "ER" and "edge_prob" not in p and "edge_count" not in p:
        if not graphs:
            raise ArgumentError(f"{spec.id}: ER needs edge_prob, edge_count or a reference corpus")
        meta["density"] = float(np.mean([2.0 * g.num_edges / (g.n * (g.n - 1)) if g.n > 1 else 0.0 for g in graphs]))
    if spec.kind == "BA" and "m" not in p:
        if not graphs:
            raise ArgumentError(f"{spec.id}: BA needs m or a reference corpus")
        meta["m"] = max(1, int(round(np.mean([g.num_edges / g.n for g in graphs]))))
    if spec.kind == "WS":
        if "k" not in p:
            if not graphs:
                raise ArgumentError(f"{spec.id}: WS needs k or a reference corpus")
            mean_deg = np.mean([2.0 * g.num_edges / g.n for g in graphs])
            meta["k"] = max(2, 2 * int(round(mean_deg / 2.0)))
        meta["beta"] = float(p.get("beta", 0.1))
    return TrainedGenerator(spec, {}, sampler, [], meta)


def _sample_traditional(gen: TrainedGenerator, rng: np.random.Generator) -> Graph:
    p, meta = gen.spec.params, gen.meta
    n = gen.node_sampler.sample(rng)
    if gen.spec.kind == "ER":
        if "edge_prob" in p:
            return er_generate(n, edge_prob=float(p["edge_prob"]), seed=rng)
        pairs = n * (n - 1) // 2
        m = int(p["edge_count"]) if "edge_count" in p else int(round(meta["density"] * pairs))
        return er_generate(n, edge_count=min(m, pairs), seed=rng)
    if gen.spec.kind == "BA":
        if n == 1:
            return Graph(1)
        return ba_generate(n, min(int(p.get("m", meta.get("m", 1))), n - 1), seed=rng)
    k = int(p.get("k", meta.get("k", 2)))
    k = min(k, n - 1 if (n - 1) % 2 == 0 else n - 2)
    return ws_generate(n, max(k, 0), float(meta.get("beta", p.get("beta", 0.1))), seed=rng)


def fit_generator(spec: GeneratorSpec, real: Corpus | None = None) -> TrainedGenerator:
    if spec.kind in ("VGAE", "Graphite"):
        if real is None:
            raise ArgumentError(f"{spec.kind} needs a training corpus")
        return fit_autoencoder(real, spec)
    if spec.kind == "GraphRNN_S":
        if real is None:
            raise ArgumentError("GraphRNN_S needs a training corpus")
        return fit_graphrnn_s(real, spec)
    return _fit_traditional(spec, real)


def sample(gen: TrainedGenerator, count: int, seed: int, dataset_id: str = "") -> Corpus:
    """Draw ``count`` graphs; sample ``i`` uses its own seed derived from ``(seed, i)``."""
    if count < 0:
        raise ArgumentError("count must be >= 0")
    kind = gen.spec.kind
    if kind in ("VGAE", "Graphite"):
        return sample_autoencoder(gen, count, seed, dataset_id)
    if kind == "GraphRNN_S":
        return sample_graphrnn_s(gen, count, seed, dataset_id)
    items = []
    for i in range(int(count)):
        rng = np.random.default_rng(derive_seed(seed, gen.spec.id, "sample", i))
        items.append(LabeledGraph(_sample_traditional(gen, rng), Authenticity.GENERATED, dataset_id, gen.spec.id, i))
    return Corpus(tuple(items), seed)


def fit_vgae(real: Corpus, config: dict | None = None, seed: int = 0, id: str = "VGAE") -> TrainedGenerator:
    return fit_autoencoder(real, GeneratorSpec(id, "VGAE", dict(config or {}), seed))


def fit_graphite(real: Corpus, config: dict | None = None, seed: int = 0, id: str = "Graphite") -> TrainedGenerator:
    return fit_autoencoder(real, GeneratorSpec(id, "Graphite", dict(config or {}), seed))


sample_vgae = sample_autoencoder
sample_graphite = sample_autoencoder


def save_generator(path, gen: TrainedGenerator) -> None:
    meta = {
        "kind": "generator",
        "spec": gen.spec.to_dict(),
        "node_sampler": gen.node_sampler.to_dict(),
        "training_log": list(gen.training_log),
        "meta": gen.meta,
    }
    save_bundle(path, gen.parameters, meta, dtype="<f4")


def load_generator(path) -> TrainedGenerator:
    params, meta = load_bundle(path)
    if meta.get("kind") != "generator":
        raise ArgumentError(f"{path} does not hold a generator")
    return TrainedGenerator(GeneratorSpec.from_dict(meta["spec"]), params,
                            NodeCountSampler.from_dict(meta["node_sampler"]),
                            list(meta["training_log"]), dict(meta["meta"]))
