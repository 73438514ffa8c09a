"""Graph augmentations for contrastive pre-training."""
from __future__ import annotations

import math

import numpy as np

from ggd.errors import ArgumentError
from ggd.graph import Graph, induced_subgraph

NODE_DROP = "NodeDrop"
EDGE_PERTURB = "EdgePerturb"
SUBGRAPH = "Subgraph"
POOL = (NODE_DROP, EDGE_PERTURB, SUBGRAPH)


def _node_drop(g: Graph, ratio: float, rng) -> Graph:
    drop = min(int(math.floor(ratio * g.n)), g.n - 1)
    if drop <= 0:
        return g
    keep = np.sort(rng.choice(g.n, size=g.n - drop, replace=False))
    return induced_subgraph(g, keep)


def _edge_perturb(g: Graph, ratio: float, rng) -> Graph:
    m = g.num_edges
    k = int(math.floor(ratio * m))
    if k <= 0:
        return g
    a = g.adjacency()
    iu, iv = np.triu_indices(g.n, k=1)
    free = np.flatnonzero(a[iu, iv] == 0)
    k = min(k, len(free))
    if k == 0:
        return g
    removed = rng.choice(m, size=k, replace=False)
    kept = np.delete(g.edges, removed, axis=0)
    added = rng.choice(free, size=k, replace=False)
    return Graph(g.n, np.vstack([kept, np.stack([iu[added], iv[added]], axis=1)]))


def _subgraph(g: Graph, ratio: float, rng) -> Graph:
    target = max(1, int(math.ceil((1.0 - ratio) * g.n)))
    if target >= g.n:
        return g
    adj = g.neighbors()
    start = int(rng.integers(g.n))
    chosen = [start]
    inside = {start}
    frontier = set(adj[start])
    while len(chosen) < target:
        if frontier:
            cand = sorted(frontier)
        else:
            # walk is stuck in a finished component; restart on an unvisited node
            cand = [v for v in range(g.n) if v not in inside]
        v = cand[int(rng.integers(len(cand)))]
        chosen.append(v)
        inside.add(v)
        frontier.discard(v)
        frontier.update(u for u in adj[v] if u not in inside)
    return induced_subgraph(g, sorted(chosen))


def augment(g: Graph, kind: str, ratio: float, seed) -> Graph:
    if not 0.0 <= ratio < 1.0:
        raise ArgumentError("augmentation ratio must lie in [0, 1)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if ratio == 0.0:
        return g
    if kind == NODE_DROP:
        return _node_drop(g, ratio, rng) if g.n >= 2 else g
    if kind == EDGE_PERTURB:
        return _edge_perturb(g, ratio, rng)
    if kind == SUBGRAPH:
        return _subgraph(g, ratio, rng) if g.n >= 2 else g
    raise ArgumentError(f"unknown augmentation {kind!r}; expected one of {POOL}")
