"""Real-graph corpora: TUDataset directories and small synthetic families for desk-scale runs."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ggd.errors import ArgumentError, ParseError
from ggd.generators.traditional import ws_generate
from ggd.graph import Authenticity, Corpus, Graph, LabeledGraph, parse_tudataset
from ggd.seeding import derive_seed

SOURCES = ("tu", "ws", "sbm")


def data_root() -> Path:
    return Path(os.environ.get("GGD_DATA_DIR", "data"))


def sbm_generate(sizes, p_in: float, p_out: float, seed) -> Graph:
    """Stochastic block model with block sizes ``sizes``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    block = np.repeat(np.arange(len(sizes)), sizes)
    n = len(block)
    iu, iv = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[iv], p_in, p_out)
    hit = rng.random(len(iu)) < prob
    return Graph(n, np.stack([iu[hit], iv[hit]], axis=1))


def synthetic_corpus(name: str, spec: dict, seed: int) -> Corpus:
    count = int(spec.get("count", 500))
    lo, hi = int(spec.get("n_min", 20)), int(spec.get("n_max", 40))
    if count < 1 or lo < 2 or hi < lo:
        raise ArgumentError(f"dataset {name}: bad count or node range")
    items = []
    for i in range(count):
        rng = np.random.default_rng(derive_seed(seed, "dataset", name, i))
        n = int(rng.integers(lo, hi + 1))
        if spec["source"] == "ws":
            g = ws_generate(n, int(spec.get("k", 4)), float(spec.get("beta", 0.1)), seed=rng)
        else:
            half = n // 2
            g = sbm_generate([half, n - half], float(spec.get("p_in", 0.3)), float(spec.get("p_out", 0.05)), rng)
        items.append(LabeledGraph(g, Authenticity.REAL, name, None, i))
    return Corpus(tuple(items), seed)


def load_dataset(name: str, spec: dict, seed: int = 0) -> Corpus:
    source = spec.get("source")
    if source not in SOURCES:
        raise ArgumentError(f"dataset {name}: source must be one of {SOURCES}")
    if source == "tu":
        path = Path(spec.get("path", name))
        if not path.is_absolute():
            path = data_root() / path
        if not path.is_dir():
            raise ParseError(f"dataset {name}: directory {path} not found (set GGD_DATA_DIR)")
        c = parse_tudataset(path)
        # keep the configured id rather than the directory name
        return Corpus(tuple(LabeledGraph(it.graph, it.authenticity, name, None, it.index) for it in c), seed)
    return synthetic_corpus(name, spec, seed)
