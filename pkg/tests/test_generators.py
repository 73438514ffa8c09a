import numpy as np
import pytest

from conftest import path, real_items, star
from ggd.datasets import synthetic_corpus
from ggd.errors import ArgumentError, TrainError
from ggd.generators import (
    GeneratorSpec, NodeCountSampler, ba_generate, edge_probabilities, er_generate, fit_generator, fit_graphite,
    fit_vgae, load_generator, sample, save_generator, ws_generate,
)
from ggd.generators.autoencoder import decode_logits, kl_standard_normal
from ggd.generators.graphrnn import bandwidth, bfs_order, decode, encode
from ggd.graph import Corpus, Graph
from ggd.stats import knn_filter, mmd, stat_features

WS_SPEC = {"source": "ws", "count": 120, "n_min": 20, "n_max": 40, "k": 4, "beta": 0.1}


def corpus_of(graphs):
    return Corpus(tuple(real_items(graphs)), 0)


def valid(g):
    e = g.edges
    if not len(e):
        return True
    return bool(np.all(e[:, 0] != e[:, 1])) and len({tuple(sorted(x)) for x in e.tolist()}) == len(e)


@pytest.fixture(scope="module")
def ws_real():
    return synthetic_corpus("WS", WS_SPEC, 0)


@pytest.fixture(scope="module")
def k4_corpus():
    k4 = Graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    return corpus_of([k4] * 50)


# -- traditional ---------------------------------------------------------------

def test_er_examples():
    assert er_generate(5, edge_prob=0.0, seed=1).num_edges == 0
    assert er_generate(5, edge_prob=0.0, seed=1).n == 5
    assert er_generate(4, edge_count=6, seed=1).num_edges == 6


def test_er_edge_count_exact():
    for s in range(1000):
        m = s % 46
        assert er_generate(10, edge_count=m, seed=s).num_edges == m


def test_er_mean_edges():
    mean = np.mean([er_generate(100, edge_prob=0.1, seed=s).num_edges for s in range(1000)])
    assert abs(mean - 495) <= 15


@pytest.mark.parametrize("kw", [dict(edge_prob=1.5), dict(edge_count=11), dict(), dict(edge_prob=0.1, edge_count=1)])
def test_er_errors(kw):
    with pytest.raises(ArgumentError):
        er_generate(5, seed=0, **kw)


def test_ba_counts():
    assert ba_generate(10, 1, seed=0).num_edges == 9
    assert ba_generate(10, 2, seed=0).num_edges == 16
    for s in range(1000):
        n = 5 + s % 20
        m = 1 + s % (n - 1)
        assert ba_generate(n, m, seed=s).num_edges == m * (n - m)


def test_ba_errors():
    with pytest.raises(ArgumentError):
        ba_generate(5, 5, seed=0)
    with pytest.raises(ArgumentError):
        ba_generate(5, 0, seed=0)


def test_ba_heavy_tail():
    hits = sum(max(np.bincount(ba_generate(200, 2, seed=s).edges.ravel())) > 8 for s in range(500))
    assert hits / 500 > 0.5


def test_ws_examples():
    g = ws_generate(6, 2, 0.0, seed=0)
    assert g.edge_set() == {(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)}


def test_ws_edge_count():
    for s in range(1000):
        n = 6 + s % 30
        k = 2 * (1 + s % 2)
        beta = (s % 11) / 10
        assert ws_generate(n, k, beta, seed=s).num_edges == n * k // 2


def test_ws_rewired_clustering():
    low = sum(stat_features(ws_generate(50, 4, 1.0, seed=s)).avg_clustering < 0.5 for s in range(200))
    assert low >= 190


@pytest.mark.parametrize("args", [(6, 3, 0.1), (6, 6, 0.1), (6, 2, 1.5)])
def test_ws_errors(args):
    with pytest.raises(ArgumentError):
        ws_generate(*args, seed=0)


def test_traditional_determinism_and_validity():
    for kind, params in [("ER", {"edge_prob": 0.3}), ("BA", {"m": 2}), ("WS", {"k": 4, "beta": 0.3})]:
        gen = fit_generator(GeneratorSpec(kind, kind, {**params, "n": 15}))
        a, b = sample(gen, 20, 7), sample(gen, 20, 7)
        assert [x.graph for x in a] == [x.graph for x in b]
        assert all(valid(x.graph) and not x.is_real and x.generator_id == kind for x in a)


def test_traditional_fitted_from_reference(ws_real):
    gen = fit_generator(GeneratorSpec("ER", "ER"), ws_real)
    assert gen.meta["density"] == pytest.approx(
        np.mean([2 * g.num_edges / (g.n * (g.n - 1)) for g in ws_real.graphs]))
    assert fit_generator(GeneratorSpec("BA", "BA"), ws_real).meta["m"] == 2
    assert fit_generator(GeneratorSpec("WS", "WS"), ws_real).meta["k"] == 4


def test_spec_validation():
    with pytest.raises(ArgumentError):
        GeneratorSpec("x", "GRAN")
    with pytest.raises(ArgumentError):
        GeneratorSpec("x", "ER", {"m": 2})
    with pytest.raises(ArgumentError):
        GeneratorSpec("", "ER")
    with pytest.raises(ArgumentError):
        GeneratorSpec.from_dict({"kind": "ER"})


def test_node_count_sampler():
    s = NodeCountSampler.from_corpus(corpus_of([path(3), path(5), path(5)]))
    rng = np.random.default_rng(0)
    assert {s.sample(rng) for _ in range(200)} == {3, 5}
    assert s.mean() == pytest.approx(13 / 3)


# -- VGAE / Graphite -----------------------------------------------------------

def test_kl_zero_for_standard_normal():
    assert kl_standard_normal(np.zeros((5, 16)), np.zeros((5, 16))) == 0.0


def test_vgae_shapes_and_training(k4_corpus):
    gen = fit_vgae(k4_corpus, {"epochs": 50, "hidden_dim": 8})
    p = gen.parameters
    assert p["enc.W1"].shape == (32, 8)
    assert p["enc.W_mu"].shape == p["enc.W_logsigma"].shape == (8, 16)
    assert gen.training_log[-1] < gen.training_log[0]


def test_vgae_sampling(k4_corpus):
    gen = fit_vgae(corpus_of([path(10)] * 5), {"epochs": 2})
    out = sample(gen, 30, 3, "D")
    assert all(it.graph.n == 10 and valid(it.graph) and it.generator_id == "VGAE" for it in out)
    assert [x.graph for x in out] == [x.graph for x in sample(gen, 30, 3, "D")]
    assert len(sample(gen, 0, 3)) == 0
    assert np.allclose(edge_probabilities(gen, np.zeros((6, 16))), 0.5)


def test_graphite_rounds_zero_is_vgae(k4_corpus):
    gen = fit_graphite(k4_corpus, {"epochs": 1, "rounds": 2})
    z = np.random.default_rng(0).normal(size=(7, 16))
    assert np.array_equal(decode_logits(gen.parameters, z, 0), z @ z.T)
    assert not np.allclose(decode_logits(gen.parameters, z, 2), z @ z.T)


def test_graphite_training_and_size(k4_corpus):
    graphite = fit_graphite(k4_corpus, {"epochs": 50})
    vgae = fit_vgae(k4_corpus, {"epochs": 1})
    assert graphite.training_log[-1] < graphite.training_log[0]
    size = lambda g: sum(v.size for v in g.parameters.values())  # noqa: E731
    assert size(graphite) > size(vgae)


def test_autoencoder_empty_corpus():
    with pytest.raises(ArgumentError):
        fit_vgae(Corpus((), 0))


def test_generator_bundle_round_trip(tmp_path, k4_corpus):
    gen = fit_graphite(k4_corpus, {"epochs": 3})
    save_generator(tmp_path / "g.bin", gen)
    back = load_generator(tmp_path / "g.bin")
    assert back.spec == gen.spec and back.meta == gen.meta
    for k in gen.parameters:
        assert np.array_equal(back.parameters[k], gen.parameters[k])
    assert [x.graph for x in sample(back, 10, 1)] == [x.graph for x in sample(gen, 10, 1)]


# -- GraphRNN_S ----------------------------------------------------------------

def test_bfs_star_encoding():
    g = star(3)
    order = bfs_order(g, 0)
    assert order == [0, 1, 2, 3]
    assert bandwidth(g, order) == 3
    seq = encode(g, order, 3)
    assert np.array_equal(seq, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert decode(seq) == g


def test_bfs_path_width_one():
    g = path(6)
    order = bfs_order(g, 0)
    assert bandwidth(g, order) == 1
    assert np.array_equal(encode(g, order, 1), np.ones((5, 1)))


def test_graphrnn_single_node_corpus():
    with pytest.raises(TrainError):
        fit_generator(GeneratorSpec("R", "GraphRNN_S"), corpus_of([Graph(1)] * 3))


def test_graphrnn_paths():
    paths = corpus_of([path(n) for n in range(5, 16)] * 3)
    gen = fit_generator(GeneratorSpec("R", "GraphRNN_S", {"epochs": 200, "hidden_dim": 16, "bfs_orders": 2}), paths)
    # random interior BFS starts alternate sides, so the learned width is 2
    assert gen.meta["width"] == 2
    assert gen.training_log[-1] < gen.training_log[0]
    out = sample(gen, 100, 0)
    near = sum(abs(it.graph.num_edges - (it.graph.n - 1)) <= 2 for it in out)
    assert near >= 80
    assert [x.graph for x in out] == [x.graph for x in sample(gen, 100, 0)]


def test_graphrnn_zero_probabilities_give_edgeless():
    paths = corpus_of([path(6)] * 4)
    gen = fit_generator(GeneratorSpec("R", "GraphRNN_S", {"epochs": 1, "hidden_dim": 4}), paths)
    gen.parameters["out.b"] = np.full_like(gen.parameters["out.b"], -1e9)
    assert all(it.graph.num_edges == 0 for it in sample(gen, 10, 0))


# -- filtering vs MMD ----------------------------------------------------------

def _filter_gap(kind, real):
    gen = fit_generator(GeneratorSpec(kind, kind, {"epochs": 20}), real)
    raw = sample(gen, 250, 0, "WS")
    return mmd(knn_filter(raw, real, 0.2), real).value - mmd(raw, real).value


def test_filter_never_hurts_graphrnn(ws_real):
    assert _filter_gap("GraphRNN_S", ws_real) <= 1e-6


@pytest.mark.xfail(strict=True, reason="prior samples of an inner-product decoder have density near 0.5; "
                   "the filter keeps a tight cluster far from the sparse reals and MMD rises")
@pytest.mark.parametrize("kind", ["VGAE", "Graphite"])
def test_filter_never_hurts_autoencoders(kind, ws_real):
    assert _filter_gap(kind, ws_real) <= 1e-6
