"""Variational graph autoencoders: VGAE and the Graphite refinement decoder.

The encoder is a two-layer GCN producing a mean and log standard deviation per
node. VGAE decodes edges as ``sigmoid(z_u . z_v)``; Graphite first runs a few
residual message-passing rounds over the soft adjacency implied by ``Z``.
"""
from __future__ import annotations

import logging

import numpy as np

from ggd.detectors.featurize import NodeFeaturizer
from ggd.errors import ArgumentError, TrainError
from ggd.generators.base import GeneratorSpec, NodeCountSampler, TrainedGenerator
from ggd.graph import Authenticity, Corpus, Graph, LabeledGraph
from ggd.nn.core import GcnLayer, GraphBatch, IDENTITY, RELU, gcn_backward, gcn_forward_cached, glorot, sigmoid
from ggd.nn.losses import bce_with_logits
from ggd.nn.optim import AdamState, adam_step
from ggd.seeding import derive_seed

log = logging.getLogger(__name__)

DEFAULTS = {"latent_dim": 16, "hidden_dim": 32, "epochs": 50, "lr": 0.01, "batch_size": 32,
            "max_degree_bucket": 31, "rounds": 2}


def _config(spec: GeneratorSpec) -> dict:
    cfg = {k: v for k, v in DEFAULTS.items()}
    cfg.update(spec.params)
    if spec.kind == "VGAE":
        cfg["rounds"] = 0
    return cfg


def init_params(d_in: int, hidden: int, latent: int, rounds: int, rng) -> dict:
    params = {
        "enc.W1": glorot(rng, d_in, hidden),
        "enc.W_mu": glorot(rng, hidden, latent),
        "enc.W_logsigma": glorot(rng, hidden, latent),
    }
    for r in range(rounds):
        params[f"dec.R{r}"] = glorot(rng, latent, latent)
    return params


def refine(params: dict, z: np.ndarray, rounds: int):
    """Graphite rounds: ``Z <- Z + tanh(P Z W_r)`` with ``P`` the row-normalized ``sigmoid(Z Z^T)``."""
    caches = []
    for r in range(rounds):
        s = sigmoid(z @ z.T)
        rowsum = s.sum(axis=1, keepdims=True)
        p = s / rowsum
        pz = p @ z
        y = np.tanh(pz @ params[f"dec.R{r}"])
        caches.append((z, s, rowsum, p, pz, y))
        z = z + y
    return z, caches


def refine_backward(params: dict, caches, dz: np.ndarray, grads: dict) -> np.ndarray:
    for r in reversed(range(len(caches))):
        z, s, rowsum, p, pz, y = caches[r]
        w = params[f"dec.R{r}"]
        dpre = dz * (1.0 - y ** 2)
        grads[f"dec.R{r}"] = grads.get(f"dec.R{r}", 0.0) + pz.T @ dpre
        dpz = dpre @ w.T
        dz_in = dz + p.T @ dpz
        dp = dpz @ z.T
        ds = (dp - (dp * p).sum(axis=1, keepdims=True)) / rowsum
        dl = ds * s * (1.0 - s)
        dz = dz_in + (dl + dl.T) @ z
    return dz


def decode_logits(params: dict, z: np.ndarray, rounds: int) -> np.ndarray:
    zr, _ = refine(params, z, rounds)
    return zr @ zr.T


def edge_probabilities(gen: TrainedGenerator, z: np.ndarray) -> np.ndarray:
    """Decoder output for latent matrix ``z`` of shape (n, latent_dim)."""
    return sigmoid(decode_logits(gen.parameters, np.asarray(z, dtype=np.float64), gen.meta["rounds"]))


def _graph_loss(params, z_g, adj_g, rounds):
    n = z_g.shape[0]
    if n < 2:
        return 0.0, np.zeros_like(z_g), None
    zr, caches = refine(params, z_g, rounds)
    logits = zr @ zr.T
    off = ~np.eye(n, dtype=bool)
    m = adj_g[off].sum() / 2.0
    pos_weight = n * n / (2.0 * m) if m > 0 else 1.0
    lv = bce_with_logits(logits[off], adj_g[off], pos_weight)
    dlogits = np.zeros((n, n))
    dlogits[off] = lv.grad
    dzr = (dlogits + dlogits.T) @ zr
    return lv.loss, dzr, caches


def _loss_and_grads(params, batch: GraphBatch, x, adjs, eps, rounds):
    layer1 = GcnLayer(params["enc.W1"], RELU)
    h1, c1 = gcn_forward_cached(layer1, batch.a_hat, x)
    l_mu = GcnLayer(params["enc.W_mu"], IDENTITY)
    l_ls = GcnLayer(params["enc.W_logsigma"], IDENTITY)
    mu, cmu = gcn_forward_cached(l_mu, batch.a_hat, h1)
    ls, cls = gcn_forward_cached(l_ls, batch.a_hat, h1)
    sigma = np.exp(ls)
    z = mu + sigma * eps

    b = batch.num_graphs
    grads: dict = {}
    dz = np.zeros_like(z)
    dmu = np.zeros_like(mu)
    dls = np.zeros_like(ls)
    total = 0.0
    for i in range(b):
        sl = batch.node_slice(i)
        n = sl.stop - sl.start
        recon, dzr, caches = _graph_loss(params, z[sl], adjs[i], rounds)
        if caches is not None:
            dz[sl] = refine_backward(params, caches, dzr, grads) / b
        kl_terms = 1.0 + 2.0 * ls[sl] - mu[sl] ** 2 - sigma[sl] ** 2
        kl = -0.5 / n * kl_terms.sum(axis=1).mean()
        total += recon + kl
        dmu[sl] += mu[sl] / (n * n * b)
        dls[sl] += (sigma[sl] ** 2 - 1.0) / (n * n * b)
    for name in list(grads):
        grads[name] = grads[name] / b
    dmu += dz
    dls += dz * sigma * eps
    dh_mu, grads["enc.W_mu"] = gcn_backward(l_mu, cmu, dmu)
    dh_ls, grads["enc.W_logsigma"] = gcn_backward(l_ls, cls, dls)
    _, grads["enc.W1"] = gcn_backward(layer1, c1, dh_mu + dh_ls)
    return total / b, grads


def kl_standard_normal(mu: np.ndarray, log_sigma: np.ndarray) -> float:
    """Per-graph KL term as used in training, for one (n, d) posterior."""
    n = mu.shape[0]
    return float(-0.5 / n * (1.0 + 2.0 * log_sigma - mu ** 2 - np.exp(2.0 * log_sigma)).sum(axis=1).mean())


def fit_autoencoder(real: Corpus, spec: GeneratorSpec) -> TrainedGenerator:
    if spec.kind not in ("VGAE", "Graphite"):
        raise ArgumentError(f"fit_autoencoder does not handle {spec.kind}")
    if len(real) == 0:
        raise ArgumentError("training corpus is empty")
    cfg = _config(spec)
    feat = NodeFeaturizer(max_degree_bucket=int(cfg["max_degree_bucket"]))
    rng = np.random.default_rng(derive_seed(spec.seed, spec.id, "fit"))
    params = init_params(feat.width, int(cfg["hidden_dim"]), int(cfg["latent_dim"]), int(cfg["rounds"]), rng)
    state = AdamState(lr=float(cfg["lr"]))
    graphs = real.graphs
    adjs_all = [g.adjacency() for g in graphs]
    bs = int(cfg["batch_size"])
    history = []
    for epoch in range(int(cfg["epochs"])):
        order = rng.permutation(len(graphs))
        losses, weights = [], []
        for start in range(0, len(order), bs):
            idx = order[start:start + bs]
            batch = GraphBatch.from_graphs([graphs[i] for i in idx])
            x = feat.from_degrees(batch.degrees)
            eps = rng.standard_normal((batch.a_hat.shape[0], int(cfg["latent_dim"])))
            loss, grads = _loss_and_grads(params, batch, x, [adjs_all[i] for i in idx], eps, int(cfg["rounds"]))
            if not np.isfinite(loss):
                raise TrainError(f"{spec.kind} loss diverged", epoch)
            adam_step(state, params, grads)
            losses.append(loss)
            weights.append(len(idx))
        history.append(float(np.average(losses, weights=weights)))
        log.debug("%s epoch %d loss %.5f", spec.id, epoch, history[-1])
    # stored bundles are 32-bit; keep the in-memory weights identical to what a reload yields
    params = {k: v.astype(np.float32).astype(np.float64) for k, v in params.items()}
    meta = {"rounds": int(cfg["rounds"]), "latent_dim": int(cfg["latent_dim"]),
            "hidden_dim": int(cfg["hidden_dim"]), "max_degree_bucket": feat.max_degree_bucket}
    return TrainedGenerator(spec, params, NodeCountSampler.from_corpus(real), history, meta)


def sample_autoencoder(gen: TrainedGenerator, count: int, seed: int, dataset_id: str = "") -> Corpus:
    items = []
    latent = gen.meta["latent_dim"]
    for i in range(int(count)):
        rng = np.random.default_rng(derive_seed(seed, gen.spec.id, "sample", i))
        n = gen.node_sampler.sample(rng)
        z = rng.standard_normal((n, latent))
        p = edge_probabilities(gen, z)
        iu, iv = np.triu_indices(n, k=1)
        keep = rng.random(len(iu)) < p[iu, iv]
        g = Graph(n, np.stack([iu[keep], iv[keep]], axis=1))
        items.append(LabeledGraph(g, Authenticity.GENERATED, dataset_id, gen.spec.id, i))
    return Corpus(tuple(items), seed)
