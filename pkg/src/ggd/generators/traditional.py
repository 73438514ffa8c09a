"""Erdos-Renyi, Barabasi-Albert and Watts-Strogatz random graphs."""
from __future__ import annotations

import numpy as np

from ggd.errors import ArgumentError
from ggd.graph import Graph


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def er_generate(n: int, edge_prob: float | None = None, edge_count: int | None = None, seed=0) -> Graph:
    """G(n, p) when ``edge_prob`` is given, otherwise G(n, M) with ``M = edge_count``."""
    if n < 1:
        raise ArgumentError("er_generate needs n >= 1")
    if (edge_prob is None) == (edge_count is None):
        raise ArgumentError("give exactly one of edge_prob and edge_count")
    rng = _rng(seed)
    iu, iv = np.triu_indices(n, k=1)
    if edge_prob is not None:
        if not 0.0 <= edge_prob <= 1.0:
            raise ArgumentError("edge_prob must lie in [0, 1]")
        keep = rng.random(len(iu)) < edge_prob
    else:
        if not 0 <= edge_count <= len(iu):
            raise ArgumentError(f"edge_count must lie in [0, {len(iu)}]")
        keep = np.zeros(len(iu), dtype=bool)
        keep[rng.choice(len(iu), size=int(edge_count), replace=False)] = True
    return Graph(n, np.stack([iu[keep], iv[keep]], axis=1))


def ba_generate(n: int, m: int, seed=0) -> Graph:
    """Preferential attachment starting from ``m`` isolated nodes.

    Each arriving node links to ``m`` distinct earlier nodes drawn with
    probability proportional to ``degree + 1``.
    """
    if not 1 <= m < n:
        raise ArgumentError(f"ba_generate needs 1 <= m < n (got m={m}, n={n})")
    rng = _rng(seed)
    weight = np.zeros(n)
    weight[:m] = 1.0
    edges = []
    for t in range(m, n):
        w = weight[:t]
        targets = rng.choice(t, size=m, replace=False, p=w / w.sum())
        for u in targets:
            edges.append((int(u), t))
        weight[targets] += 1.0
        weight[t] = 1.0 + m
    return Graph(n, edges)


def ws_generate(n: int, k: int, beta: float, seed=0) -> Graph:
    """Ring lattice of even degree ``k`` with each edge rewired with probability ``beta``."""
    if k < 0 or k % 2 or k >= n:
        raise ArgumentError(f"ws_generate needs even 0 <= k < n (got k={k}, n={n})")
    if not 0.0 <= beta <= 1.0:
        raise ArgumentError("beta must lie in [0, 1]")
    rng = _rng(seed)
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in range(1, k // 2 + 1):
            v = (i + j) % n
            adj[i].add(v)
            adj[v].add(i)
    for j in range(1, k // 2 + 1):
        for i in range(n):
            v = (i + j) % n
            if rng.random() >= beta or v not in adj[i]:
                continue
            free = [w for w in range(n) if w != i and w not in adj[i]]
            if not free:
                continue
            w = free[rng.integers(len(free))]
            adj[i].discard(v)
            adj[v].discard(i)
            adj[i].add(w)
            adj[w].add(i)
    return Graph(n, [(i, v) for i in range(n) for v in adj[i] if i < v])
