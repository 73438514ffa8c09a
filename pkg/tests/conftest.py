import numpy as np
import pytest
from hypothesis import settings, strategies as st

from ggd.graph import Authenticity, Corpus, Graph, LabeledGraph

settings.register_profile("ggd", deadline=None, derandomize=True)
settings.load_profile("ggd")


def triangle():
    return Graph(3, [(0, 1), (1, 2), (0, 2)])


def path(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def star(leaves):
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete(n):
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_graph(rng, n, p=0.3):
    iu, iv = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, np.stack([iu[keep], iv[keep]], axis=1))


def real_items(graphs, dataset="D"):
    return [LabeledGraph(g, Authenticity.REAL, dataset, None, i) for i, g in enumerate(graphs)]


def fake_items(graphs, generator="G", dataset="D"):
    return [LabeledGraph(g, Authenticity.GENERATED, dataset, generator, i) for i, g in enumerate(graphs)]


def corpus(items, seed=0):
    return Corpus(tuple(items), seed)


@st.composite
def graphs(draw, min_n=1, max_n=9):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, [p for p, keep in zip(pairs, mask) if keep])


def separable_corpus(k=20):
    """Reals are triangles, fakes are edgeless 3-node graphs."""
    reals = real_items([triangle()] * k)
    fakes = fake_items([Graph(3)] * k)
    return corpus(reals + fakes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting ------------------------------------------------------

CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Call with ``(number, passed, detail)``; ``passed=None`` marks a skip. Printed in the session summary."""
    def record(number, passed, detail=""):
        CRITERIA[number] = (None if passed is None else bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
