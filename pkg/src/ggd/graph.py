"""Graph containers, corpus I/O and deterministic splitting."""
from __future__ import annotations

import enum
import json
import logging
import math
import os
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from ggd.errors import ArgumentError, ParseError, SplitError

log = logging.getLogger(__name__)


class Authenticity(str, enum.Enum):
    REAL = "real"
    GENERATED = "generated"


class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1``.

    Edges are stored once each as ``(u, v)`` with ``u < v``, sorted
    lexicographically, so two graphs with the same edge set compare equal
    regardless of the order edges were supplied in.
    """

    __slots__ = ("_n", "_edges", "_hash", "_adj")

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = ()):
        n = int(n)
        if n < 0:
            raise ArgumentError(f"node count must be >= 0, got {n}")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((0, 2), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ArgumentError("edges must be a sequence of (u, v) pairs")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ArgumentError(f"edge endpoint out of range for n={n}")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise ArgumentError("self-loops are not allowed")
        arr = np.sort(arr, axis=1)
        canon = np.unique(arr, axis=0)
        if len(canon) != len(arr):
            raise ArgumentError("duplicate edges are not allowed")
        canon.setflags(write=False)
        self._n = n
        self._edges = canon
        self._hash = None
        self._adj = None

    @classmethod
    def from_adjacency(cls, adj) -> "Graph":
        adj = np.asarray(adj)
        iu, iv = np.nonzero(np.triu(adj, k=1))
        return cls(adj.shape[0], np.stack([iu, iv], axis=1))

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> np.ndarray:
        """(m, 2) read-only array with ``u < v`` in each row."""
        return self._edges

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self._edges}

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self._n, self._n), dtype=np.float64)
        if len(self._edges):
            a[self._edges[:, 0], self._edges[:, 1]] = 1.0
            a[self._edges[:, 1], self._edges[:, 0]] = 1.0
        return a

    def neighbors(self) -> list[list[int]]:
        if self._adj is None:
            adj: list[list[int]] = [[] for _ in range(self._n)]
            for u, v in self._edges.tolist():
                adj[u].append(v)
                adj[v].append(u)
            self._adj = adj
        return self._adj

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._edges, other._edges)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._n, self._edges.tobytes()))
        return self._hash

    def __repr__(self):
        return f"Graph(n={self._n}, m={self.num_edges})"


@dataclass(frozen=True)
class LabeledGraph:
    """A graph plus its provenance.

    ``index`` is the position of the graph in its source (TUDataset graph id
    minus one, or the sample number of a generator) and together with the
    dataset and generator ids identifies the item for leak checks.
    """

    graph: Graph
    authenticity: Authenticity
    dataset_id: str
    generator_id: str | None = None
    index: int = 0

    def __post_init__(self):
        auth = Authenticity(self.authenticity)
        object.__setattr__(self, "authenticity", auth)
        if (auth is Authenticity.GENERATED) != (self.generator_id is not None):
            raise ArgumentError("generator_id must be set exactly for generated graphs")

    @property
    def is_real(self) -> bool:
        return self.authenticity is Authenticity.REAL

    @property
    def key(self) -> tuple:
        return (self.dataset_id, self.generator_id, self.index)


@dataclass(frozen=True)
class Corpus:
    items: tuple[LabeledGraph, ...] = ()
    seed: int = 0

    def __post_init__(self):
        items = tuple(self.items)
        for it in items:
            if it.graph.n == 0:
                raise ArgumentError("graphs with n=0 cannot be part of a corpus")
        object.__setattr__(self, "items", items)

    def __len__(self):
        return len(self.items)

    def __iter__(self) -> Iterator[LabeledGraph]:
        return iter(self.items)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Corpus(self.items[i], self.seed)
        return self.items[i]

    @property
    def graphs(self) -> list[Graph]:
        return [it.graph for it in self.items]

    def labels(self) -> np.ndarray:
        """1 for real, 0 for generated."""
        return np.array([1 if it.is_real else 0 for it in self.items], dtype=np.int64)

    def select(self, predicate) -> "Corpus":
        return Corpus(tuple(it for it in self.items if predicate(it)), self.seed)

    def __add__(self, other: "Corpus") -> "Corpus":
        return Corpus(self.items + other.items, self.seed)


@dataclass(frozen=True)
class Split:
    train: Corpus
    test: Corpus


def degree_sequence(g: Graph) -> list[int]:
    deg = np.zeros(g.n, dtype=np.int64)
    if g.num_edges:
        np.add.at(deg, g.edges.ravel(), 1)
    return deg.tolist()


def connected_components(g: Graph) -> list[set[int]]:
    adj = g.neighbors()
    seen = [False] * g.n
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        comp = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.add(v)
                    queue.append(v)
        comps.append(comp)
    return comps


def relabel_nodes(g: Graph, permutation) -> Graph:
    """Map node ``u`` to ``permutation[u]``."""
    perm = np.asarray(permutation, dtype=np.int64)
    if perm.shape != (g.n,) or not np.array_equal(np.sort(perm), np.arange(g.n)):
        raise ArgumentError("permutation must be a bijection on range(n)")
    if g.num_edges == 0:
        return Graph(g.n)
    return Graph(g.n, perm[g.edges])


def induced_subgraph(g: Graph, nodes) -> Graph:
    """Subgraph on ``nodes``, reindexed in the given order."""
    nodes = list(nodes)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    if g.num_edges == 0:
        return Graph(len(nodes))
    e = remap[g.edges]
    keep = (e >= 0).all(axis=1)
    return Graph(len(nodes), e[keep])


def split_corpus(c: Corpus, train_fraction: float, seed: int) -> Split:
    if len(c) < 2:
        raise SplitError(f"need at least 2 items to split, got {len(c)}")
    if not 0.0 < train_fraction < 1.0:
        raise ArgumentError("train_fraction must lie in (0, 1)")
    n_train = int(math.floor(train_fraction * len(c) + 0.5))
    n_train = min(max(n_train, 1), len(c) - 1)
    order = np.random.default_rng(seed).permutation(len(c))
    items = c.items
    train = tuple(items[i] for i in order[:n_train])
    test = tuple(items[i] for i in order[n_train:])
    return Split(Corpus(train, seed), Corpus(test, seed))


def shuffled(c: Corpus, seed: int) -> Corpus:
    order = np.random.default_rng(seed).permutation(len(c))
    return Corpus(tuple(c.items[i] for i in order), seed)


# -- TUDataset ---------------------------------------------------------------

def _read_ints(path: Path) -> np.ndarray:
    text = path.read_text(encoding="utf-8").replace(",", " ")
    try:
        return np.array(text.split(), dtype=np.int64)
    except ValueError as exc:
        raise ParseError(f"{path}: non-integer token ({exc})") from None


def parse_tudataset(directory_path) -> Corpus:
    """Read a TUDataset directory (``DS_A.txt`` + ``DS_graph_indicator.txt``).

    Node and edge attribute files, and graph labels, are ignored.
    """
    d = Path(directory_path)
    name = d.name
    a_path = d / f"{name}_A.txt"
    ind_path = d / f"{name}_graph_indicator.txt"
    for p in (a_path, ind_path):
        if not p.is_file():
            raise ParseError(f"missing file: {p}")

    indicator = _read_ints(ind_path)
    flat = _read_ints(a_path)
    if flat.size % 2:
        raise ParseError(f"{a_path}: odd number of endpoints")
    raw = flat.reshape(-1, 2) - 1
    num_nodes = len(indicator)
    if raw.size and (raw.min() < 0 or raw.max() >= num_nodes):
        raise ParseError(f"{a_path}: edge references a node with no graph indicator entry")

    graph_ids, node_graph = np.unique(indicator, return_inverse=True)
    counts = np.bincount(node_graph, minlength=len(graph_ids))
    # rank of each node within its graph, in file order
    by_graph = np.argsort(node_graph, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.empty(num_nodes, dtype=np.int64)
    local[by_graph] = np.arange(num_nodes) - starts[node_graph[by_graph]]

    loops = raw[:, 0] == raw[:, 1] if raw.size else np.zeros(0, dtype=bool)
    if loops.any():
        log.warning("%s: dropped %d self-loop lines", name, int(loops.sum()))
    raw = raw[~loops]
    if raw.size:
        g_u = node_graph[raw[:, 0]]
        if np.any(g_u != node_graph[raw[:, 1]]):
            raise ParseError(f"{a_path}: edge joins nodes from different graphs")
    else:
        g_u = np.zeros(0, dtype=np.int64)

    canon = np.sort(local[raw], axis=1) if raw.size else np.zeros((0, 2), dtype=np.int64)
    key = np.stack([g_u, canon[:, 0], canon[:, 1]], axis=1) if raw.size else np.zeros((0, 3), dtype=np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    first.sort()
    dropped = len(key) - len(first)
    if dropped:
        log.info("%s: dropped %d duplicate/reversed edge lines", name, dropped)
    key = key[first]

    order = np.argsort(key[:, 0], kind="stable") if len(key) else np.zeros(0, dtype=np.int64)
    key = key[order]
    bounds = np.searchsorted(key[:, 0], np.arange(len(graph_ids) + 1)) if len(key) else np.zeros(len(graph_ids) + 1, dtype=np.int64)
    items = []
    for gi in range(len(graph_ids)):
        e = key[bounds[gi]:bounds[gi + 1], 1:]
        items.append(LabeledGraph(Graph(int(counts[gi]), e), Authenticity.REAL, name, None, gi))
    return Corpus(tuple(items), 0)


# -- internal JSONL format ---------------------------------------------------

def graph_to_record(item: LabeledGraph) -> dict:
    return {
        "n": item.graph.n,
        "edges": item.graph.edges.tolist(),
        "authenticity": item.authenticity.value,
        "dataset": item.dataset_id,
        "generator": item.generator_id,
        "index": item.index,
    }


def record_to_graph(rec: dict, line_no: int = 0) -> LabeledGraph:
    try:
        g = Graph(rec["n"], rec["edges"])
        return LabeledGraph(g, Authenticity(rec["authenticity"]), rec["dataset"],
                            rec.get("generator"), int(rec.get("index", line_no)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"line {line_no + 1}: invalid record ({exc})") from None


def dumps_jsonl(corpus: Corpus) -> str:
    return "".join(json.dumps(graph_to_record(it), separators=(",", ":")) + "\n" for it in corpus)


def write_jsonl(corpus: Corpus, path) -> None:
    atomic_write_text(path, dumps_jsonl(corpus))


def read_jsonl(path, seed: int = 0) -> Corpus:
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"missing file: {p}")
    items = []
    with p.open(encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{p}:{i + 1}: {exc}") from None
            items.append(record_to_graph(rec, i))
    return Corpus(tuple(items), seed)


def atomic_write_bytes(path, data: bytes) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_name(f".{p.name}.tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, p)


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
