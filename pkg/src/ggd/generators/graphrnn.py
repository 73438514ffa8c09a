"""Single-RNN GraphRNN variant over BFS adjacency sequences.

A graph in BFS order is encoded as one bit-vector per node ``i >= 1``; bit
``j`` says whether node ``i`` links to node ``i - 1 - j``. The width ``M`` is
the largest backward reach seen in the training orderings. A GRU reads the
previous vector and emits independent Bernoulli probabilities for the next one.
"""
from __future__ import annotations

import logging
from collections import deque

import numpy as np

from ggd.errors import ArgumentError, TrainError
from ggd.generators.base import GeneratorSpec, NodeCountSampler, TrainedGenerator
from ggd.graph import Authenticity, Corpus, Graph, LabeledGraph
from ggd.nn.core import Dense, sigmoid
from ggd.nn.gru import GRUCell
from ggd.nn.losses import bce_with_logits
from ggd.nn.optim import AdamState, adam_step
from ggd.seeding import derive_seed

log = logging.getLogger(__name__)

DEFAULTS = {"hidden_dim": 64, "epochs": 100, "lr": 0.01, "batch_size": 32, "bfs_orders": 8}


def bfs_order(g: Graph, start: int, rng: np.random.Generator | None = None) -> list[int]:
    """BFS from ``start`` over every component; neighbours are visited in index order
    unless ``rng`` is given, in which case each adjacency list is shuffled."""
    adj = g.neighbors()
    seen = [False] * g.n
    order = []
    starts = [start] + [v for v in (rng.permutation(g.n).tolist() if rng is not None else range(g.n)) if v != start]
    for s in starts:
        if seen[s]:
            continue
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            nbrs = sorted(adj[u])
            if rng is not None:
                nbrs = [nbrs[i] for i in rng.permutation(len(nbrs))]
            for v in nbrs:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
    return order


def bandwidth(g: Graph, order) -> int:
    pos = np.empty(g.n, dtype=np.int64)
    pos[np.asarray(order)] = np.arange(g.n)
    if g.num_edges == 0:
        return 0
    p = pos[g.edges]
    return int(np.abs(p[:, 0] - p[:, 1]).max())


def encode(g: Graph, order, width: int) -> np.ndarray:
    """(n - 1, width) matrix; row ``i - 1`` is the vector of the ``i``-th node in ``order``.
    Links reaching further back than ``width`` are dropped."""
    pos = np.empty(g.n, dtype=np.int64)
    pos[np.asarray(order)] = np.arange(g.n)
    seq = np.zeros((max(g.n - 1, 0), width))
    for u, v in g.edges.tolist():
        a, b = sorted((pos[u], pos[v]))
        j = b - 1 - a
        if j < width:
            seq[b - 1, j] = 1.0
    return seq


def decode(seq: np.ndarray) -> Graph:
    n = seq.shape[0] + 1
    edges = [(int(i - j), int(i + 1)) for i, j in zip(*np.nonzero(seq))]
    return Graph(n, edges)


class _Model:
    def __init__(self, width: int, hidden: int):
        self.width = width
        self.cell = GRUCell("rnn", width, hidden)
        self.head = Dense("out", hidden, width)
        self.hidden = hidden

    def init(self, rng):
        params = self.cell.init({}, rng)
        self.head.init(params, rng)
        return params

    def loss_and_grads(self, params, seqs):
        """Summed BCE per graph, averaged over the batch."""
        b = len(seqs)
        steps = max(len(s) for s in seqs)
        m = self.width
        targets = np.zeros((steps, b, m))
        mask = np.zeros((steps, b, m))
        valid_cols = np.arange(m)
        for k, s in enumerate(seqs):
            t = len(s)
            targets[:t, k] = s
            # step i predicts node i + 1, which can only reach back i + 1 nodes
            mask[:t, k] = valid_cols[None, :] < (np.arange(t)[:, None] + 1)
        h = np.zeros((b, self.hidden))
        x = np.ones((b, m))
        caches = []
        total = 0.0
        dlogits_all = []
        for t in range(steps):
            h, c = self.cell.forward(params, x, h)
            logits, hc = self.head.forward(params, h)
            lv = bce_with_logits(logits, targets[t], reduce="none")
            total += float((lv.loss * mask[t]).sum())
            dlogits_all.append(lv.grad * mask[t] / b)
            caches.append((c, hc))
            x = targets[t]
        grads: dict = {}
        dh = np.zeros((b, self.hidden))
        for t in reversed(range(steps)):
            c, hc = caches[t]
            dh = dh + self.head.backward(params, hc, dlogits_all[t], grads)
            _, dh = self.cell.backward(params, c, dh, grads)
        return total / b, grads

    def sample(self, params, n: int, rng: np.random.Generator) -> Graph:
        m = self.width
        seq = np.zeros((max(n - 1, 0), m))
        h = np.zeros((1, self.hidden))
        x = np.ones((1, m))
        for i in range(1, n):
            h, _ = self.cell.forward(params, x, h)
            logits, _ = self.head.forward(params, h)
            p = sigmoid(logits[0])
            p[min(i, m):] = 0.0
            bits = (rng.random(m) < p).astype(np.float64)
            seq[i - 1] = bits
            x = bits[None, :]
        return decode(seq)


def fit_graphrnn_s(real: Corpus, spec: GeneratorSpec) -> TrainedGenerator:
    if spec.kind != "GraphRNN_S":
        raise ArgumentError(f"fit_graphrnn_s does not handle {spec.kind}")
    if len(real) == 0:
        raise ArgumentError("training corpus is empty")
    graphs = real.graphs
    if all(g.n <= 1 for g in graphs):
        raise TrainError("training graphs all have a single node; there are no edges to model")
    cfg = dict(DEFAULTS)
    cfg.update(spec.params)
    rng = np.random.default_rng(derive_seed(spec.seed, spec.id, "fit"))
    usable = [g for g in graphs if g.n > 1]

    def random_order(g):
        return bfs_order(g, int(rng.integers(g.n)), rng)

    width = 1
    for g in usable:
        for _ in range(int(cfg["bfs_orders"])):
            width = max(width, bandwidth(g, random_order(g)))

    model = _Model(width, int(cfg["hidden_dim"]))
    params = model.init(rng)
    state = AdamState(lr=float(cfg["lr"]))
    bs = int(cfg["batch_size"])
    history = []
    for epoch in range(int(cfg["epochs"])):
        order = rng.permutation(len(usable))
        losses, weights = [], []
        for start in range(0, len(order), bs):
            chunk = [usable[i] for i in order[start:start + bs]]
            seqs = [encode(g, random_order(g), width) for g in chunk]
            loss, grads = model.loss_and_grads(params, seqs)
            if not np.isfinite(loss):
                raise TrainError("GraphRNN_S loss diverged", epoch)
            adam_step(state, params, grads)
            losses.append(loss)
            weights.append(len(chunk))
        history.append(float(np.average(losses, weights=weights)))
        log.debug("%s epoch %d loss %.5f", spec.id, epoch, history[-1])
    params = {k: v.astype(np.float32).astype(np.float64) for k, v in params.items()}
    meta = {"width": width, "hidden_dim": int(cfg["hidden_dim"])}
    return TrainedGenerator(spec, params, NodeCountSampler.from_corpus(real), history, meta)


def sample_graphrnn_s(gen: TrainedGenerator, count: int, seed: int, dataset_id: str = "") -> Corpus:
    model = _Model(gen.meta["width"], gen.meta["hidden_dim"])
    items = []
    for i in range(int(count)):
        rng = np.random.default_rng(derive_seed(seed, gen.spec.id, "sample", i))
        g = model.sample(gen.parameters, gen.node_sampler.sample(rng), rng)
        items.append(LabeledGraph(g, Authenticity.GENERATED, dataset_id, gen.spec.id, i))
    return Corpus(tuple(items), seed)
