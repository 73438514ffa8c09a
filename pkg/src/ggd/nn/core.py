"""Dense layers, GCN propagation and mean pooling with explicit backward passes.

Parameters live in plain ``dict[str, ndarray]`` bundles; every forward
function returns its output and a cache that the matching backward consumes.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ggd.errors import ArgumentError, ShapeError
from ggd.graph import Graph

RELU = "relu"
IDENTITY = "identity"


def normalize_adjacency(g: Graph) -> np.ndarray:
    """``D^-1/2 (A + I) D^-1/2`` as a dense matrix."""
    if g.n < 1:
        raise ArgumentError("normalize_adjacency needs n >= 1")
    a = g.adjacency() + np.eye(g.n)
    inv = 1.0 / np.sqrt(a.sum(axis=1))
    return a * inv[:, None] * inv[None, :]


@functools.lru_cache(maxsize=1 << 17)
def _normalized_coo(g: Graph):
    n = g.n
    deg = np.zeros(n)
    e = g.edges
    if len(e):
        np.add.at(deg, e.ravel(), 1.0)
    inv = 1.0 / np.sqrt(deg + 1.0)
    rows = np.concatenate([e[:, 0], e[:, 1], np.arange(n)])
    cols = np.concatenate([e[:, 1], e[:, 0], np.arange(n)])
    vals = inv[rows] * inv[cols]
    return rows, cols, vals, deg.astype(np.int64)


@dataclass
class GraphBatch:
    """Several graphs packed into one block-diagonal propagation matrix.

    ``a_hat`` is the sparse ``(N, N)`` normalized adjacency over all nodes and
    ``pool`` the ``(B, N)`` averaging matrix mapping node rows to graphs.
    """

    a_hat: sp.csr_matrix
    pool: sp.csr_matrix
    sizes: np.ndarray
    offsets: np.ndarray
    degrees: np.ndarray

    @classmethod
    def from_graphs(cls, graphs) -> "GraphBatch":
        graphs = list(graphs)
        sizes = np.array([g.n for g in graphs], dtype=np.int64)
        if np.any(sizes < 1):
            raise ArgumentError("every graph in a batch needs at least one node")
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        total = int(offsets[-1])
        rows, cols, vals, degs = [], [], [], []
        for g, off in zip(graphs, offsets[:-1]):
            r, c, v, d = _normalized_coo(g)
            rows.append(r + off)
            cols.append(c + off)
            vals.append(v)
            degs.append(d)
        a_hat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(total, total))
        a_hat.sort_indices()
        owner = np.repeat(np.arange(len(graphs)), sizes)
        pool = sp.csr_matrix((1.0 / sizes[owner], (owner, np.arange(total))), shape=(len(graphs), total))
        return cls(a_hat, pool, sizes, offsets, np.concatenate(degs))

    @property
    def num_graphs(self) -> int:
        return len(self.sizes)

    def node_slice(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))


@dataclass
class GcnLayer:
    W: np.ndarray
    activation: str = RELU


def _propagate(a_hat, h):
    return a_hat @ h


def gcn_forward(layer: GcnLayer, a_hat, h: np.ndarray) -> np.ndarray:
    """``activation(A_hat @ H @ W)``."""
    return gcn_forward_cached(layer, a_hat, h)[0]


def gcn_forward_cached(layer: GcnLayer, a_hat, h: np.ndarray):
    if a_hat.shape[0] != a_hat.shape[1] or a_hat.shape[1] != h.shape[0]:
        raise ShapeError(f"A_hat {a_hat.shape} incompatible with H {h.shape}")
    if h.shape[1] != layer.W.shape[0]:
        raise ShapeError(f"H {h.shape} incompatible with W {layer.W.shape}")
    ah = _propagate(a_hat, h)
    pre = ah @ layer.W
    out = np.maximum(pre, 0.0) if layer.activation == RELU else pre
    return out, (a_hat, ah, pre)


def gcn_backward(layer: GcnLayer, cache, dout: np.ndarray):
    """Returns ``(dH, dW)``. ``A_hat`` is symmetric so its transpose is itself."""
    a_hat, ah, pre = cache
    dpre = dout * (pre > 0) if layer.activation == RELU else dout
    dW = ah.T @ dpre
    dH = _propagate(a_hat, dpre @ layer.W.T)
    return dH, dW


def mean_pool(h: np.ndarray) -> np.ndarray:
    if h.ndim != 2 or h.shape[0] == 0:
        raise ArgumentError("mean_pool needs an (n, d) input with n >= 1")
    return h.mean(axis=0)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class GcnStack:
    """GCN layers followed by mean pooling, weights held in a shared param dict."""

    def __init__(self, prefix: str, dims, activations=None):
        self.prefix = prefix
        self.dims = list(dims)
        depth = len(self.dims) - 1
        self.activations = list(activations) if activations else [RELU] * (depth - 1) + [IDENTITY]
        if len(self.activations) != depth:
            raise ArgumentError("one activation per layer")

    def names(self):
        return [f"{self.prefix}.{i}.W" for i in range(len(self.dims) - 1)]

    def init(self, params: dict, rng: np.random.Generator) -> dict:
        for name, (a, b) in zip(self.names(), zip(self.dims[:-1], self.dims[1:])):
            params[name] = glorot(rng, a, b)
        return params

    def layers(self, params):
        return [GcnLayer(params[n], act) for n, act in zip(self.names(), self.activations)]

    def node_forward(self, params, a_hat, x):
        caches = []
        h = x
        for layer in self.layers(params):
            h, c = gcn_forward_cached(layer, a_hat, h)
            caches.append(c)
        return h, caches

    def node_backward(self, params, caches, dh, grads: dict):
        for name, layer, c in reversed(list(zip(self.names(), self.layers(params), caches))):
            dh, dW = gcn_backward(layer, c, dh)
            grads[name] = grads.get(name, 0.0) + dW
        return dh

    def forward(self, params, batch: GraphBatch, x):
        """Graph embeddings ``(B, d_out)``."""
        h, caches = self.node_forward(params, batch.a_hat, x)
        return np.asarray(batch.pool @ h), caches

    def backward(self, params, batch: GraphBatch, caches, dg, grads: dict):
        self.node_backward(params, caches, np.asarray(batch.pool.T @ dg), grads)
        return grads


class Dense:
    """Affine map ``x @ W + b``."""

    def __init__(self, prefix: str, d_in: int, d_out: int):
        self.prefix, self.d_in, self.d_out = prefix, d_in, d_out

    @property
    def w(self):
        return f"{self.prefix}.W"

    @property
    def b(self):
        return f"{self.prefix}.b"

    def init(self, params, rng):
        params[self.w] = glorot(rng, self.d_in, self.d_out)
        params[self.b] = np.zeros(self.d_out)
        return params

    def forward(self, params, x):
        return x @ params[self.w] + params[self.b], x

    def backward(self, params, x, dout, grads):
        grads[self.w] = grads.get(self.w, 0.0) + x.T @ dout
        grads[self.b] = grads.get(self.b, 0.0) + dout.sum(axis=0)
        return dout @ params[self.w].T


class MLP:
    """Dense layers with ReLU between them (none after the last)."""

    def __init__(self, prefix: str, dims):
        self.layers = [Dense(f"{prefix}.{i}", a, b) for i, (a, b) in enumerate(zip(dims[:-1], dims[1:]))]

    def init(self, params, rng):
        for layer in self.layers:
            layer.init(params, rng)
        return params

    def forward(self, params, x):
        caches = []
        for i, layer in enumerate(self.layers):
            x, c = layer.forward(params, x)
            pre = x
            if i < len(self.layers) - 1:
                x = np.maximum(x, 0.0)
            caches.append((c, pre))
        return x, caches

    def backward(self, params, caches, dout, grads):
        for i in reversed(range(len(self.layers))):
            c, pre = caches[i]
            if i < len(self.layers) - 1:
                dout = dout * (pre > 0)
            dout = self.layers[i].backward(params, c, dout, grads)
        return dout


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
