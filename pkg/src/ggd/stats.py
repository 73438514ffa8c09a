"""Statistical graph descriptors, 1-NN quality filtering and feature MMD."""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import cdist, pdist

from ggd.errors import ArgumentError
from ggd.graph import Corpus, Graph, connected_components

FEATURE_NAMES = ("num_nodes", "num_edges", "density", "diameter", "avg_clustering", "transitivity")
STD_FLOOR = 1e-8


@dataclass(frozen=True)
class StatFeatures:
    num_nodes: int
    num_edges: int
    density: float
    diameter: int
    avg_clustering: float
    transitivity: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


def _diameter(g: Graph) -> int:
    if g.num_edges == 0:
        return 0
    comps = connected_components(g)
    size = max(len(c) for c in comps)
    best = 0
    # several components can tie on size; take the widest so relabeling cannot change the answer
    for comp in comps:
        if len(comp) != size or size < 2:
            continue
        nodes = sorted(comp)
        sub = g.adjacency()[np.ix_(nodes, nodes)]
        dist = shortest_path(csr_matrix(sub), method="D", unweighted=True, directed=False)
        best = max(best, int(dist.max()))
    return best


def stat_features(g: Graph) -> StatFeatures:
    n, m = g.n, g.num_edges
    if n == 0:
        raise ArgumentError("stat_features needs at least one node")
    density = 2.0 * m / (n * (n - 1)) if n >= 2 else 0.0
    if m == 0:
        return StatFeatures(n, 0, density, 0, 0.0, 0.0)
    a = g.adjacency()
    deg = a.sum(axis=1)
    closed = np.einsum("ij,ji->i", a @ a, a)  # 2 * triangles through each node
    pairs = deg * (deg - 1.0)
    local = np.divide(closed, pairs, out=np.zeros(n), where=pairs > 0)
    triples = pairs.sum() / 2.0
    transitivity = float(closed.sum() / 2.0 / triples) if triples > 0 else 0.0
    return StatFeatures(n, m, density, _diameter(g), float(local.mean()), transitivity)


def feature_matrix(graphs) -> np.ndarray:
    if isinstance(graphs, Corpus):
        graphs = graphs.graphs
    if not len(graphs):
        return np.zeros((0, len(FEATURE_NAMES)))
    return np.stack([stat_features(g).as_array() for g in graphs])


@dataclass(frozen=True)
class FeatureScaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "FeatureScaler":
        x = np.asarray(x, dtype=np.float64)
        return cls(x.mean(axis=0), np.maximum(x.std(axis=0), STD_FLOOR))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


def nearest_real_distances(generated: Corpus, real: Corpus) -> np.ndarray:
    """Standardized Euclidean distance from each generated graph to its closest real graph."""
    if len(real) == 0:
        raise ArgumentError("real corpus is empty")
    if len(generated) == 0:
        return np.zeros(0)
    fr = feature_matrix(real)
    scaler = FeatureScaler.fit(fr)
    return cdist(scaler.transform(feature_matrix(generated)), scaler.transform(fr)).min(axis=1)


def keep_count(total: int, keep_fraction: float) -> int:
    # round first so 0.2 * 15 does not become ceil(3.0000000000000004)
    return int(math.ceil(round(keep_fraction * total, 9)))


def knn_filter(generated: Corpus, real: Corpus, keep_fraction: float = 0.2) -> Corpus:
    """Keep the generated graphs whose nearest real neighbour is closest.

    Returns ``ceil(keep_fraction * len(generated))`` items in their original
    order; equal distances are resolved in favour of the earlier item.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ArgumentError("keep_fraction must lie in (0, 1]")
    if len(real) == 0:
        raise ArgumentError("real corpus is empty")
    if len(generated) == 0:
        raise ArgumentError("generated corpus is empty")
    dist = nearest_real_distances(generated, real)
    k = keep_count(len(generated), keep_fraction)
    chosen = np.sort(np.argsort(dist, kind="stable")[:k])
    return Corpus(tuple(generated.items[i] for i in chosen), generated.seed)


@dataclass(frozen=True)
class MMDResult:
    value: float
    bandwidth: float
    fallback: bool

    def __float__(self):
        return self.value


def gaussian_kernel(x: np.ndarray, y: np.ndarray, bandwidth: float) -> np.ndarray:
    return np.exp(-cdist(x, y, "sqeuclidean") / (2.0 * bandwidth ** 2))


def mmd(a: Corpus, b: Corpus, bandwidth: float | None = None) -> MMDResult:
    """Biased (V-statistic) squared MMD between the feature sets of two corpora.

    Features are z-scored with a scaler fitted on the real graphs of ``a`` and
    ``b`` together (all graphs when neither side holds any, or both are all
    real), so the statistic is symmetric and, when one side is the real
    reference, independent of the generated side's spread.
    """
    if len(a) == 0 or len(b) == 0:
        raise ArgumentError("mmd needs two non-empty corpora")
    fa, fb = feature_matrix(a), feature_matrix(b)
    real = np.array([it.is_real for it in a.items] + [it.is_real for it in b.items])
    pooled = np.vstack([fa, fb])
    ref = pooled[real] if real.any() else pooled
    return mmd_features(fa, fb, bandwidth, FeatureScaler.fit(ref))


def mmd_features(fa: np.ndarray, fb: np.ndarray, bandwidth: float | None = None,
                 scaler: FeatureScaler | None = None) -> MMDResult:
    if scaler is None:
        scaler = FeatureScaler.fit(np.vstack([fa, fb]))
    xa, xb = scaler.transform(fa), scaler.transform(fb)
    fallback = False
    if bandwidth is None:
        pooled = np.vstack([xa, xb])
        d = pdist(pooled) if len(pooled) > 1 else np.zeros(1)
        bandwidth = float(np.median(d))
        if not bandwidth > 0.0:
            bandwidth, fallback = 1.0, True
    elif bandwidth <= 0:
        raise ArgumentError("bandwidth must be positive")
    kaa = gaussian_kernel(xa, xa, bandwidth).mean()
    kbb = gaussian_kernel(xb, xb, bandwidth).mean()
    kab = gaussian_kernel(xa, xb, bandwidth).mean()
    return MMDResult(max(0.0, float(kaa + kbb - 2.0 * kab)), float(bandwidth), fallback)
