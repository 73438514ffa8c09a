import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import corpus, graphs, path, random_graph, real_items, star, triangle, fake_items
from ggd.errors import ArgumentError, ParseError, SplitError
from ggd.graph import (
    Authenticity, Corpus, Graph, LabeledGraph, connected_components, degree_sequence, dumps_jsonl,
    parse_tudataset, read_jsonl, relabel_nodes, split_corpus, write_jsonl,
)


def write_tu(tmp_path, name, indicator, edges):
    d = tmp_path / name
    d.mkdir()
    (d / f"{name}_graph_indicator.txt").write_text("".join(f"{i}\n" for i in indicator))
    (d / f"{name}_A.txt").write_text("".join(f"{u}, {v}\n" for u, v in edges))
    return d


class TestGraph:
    def test_rejects_self_loops(self):
        with pytest.raises(ArgumentError):
            Graph(3, [(1, 1)])

    def test_rejects_duplicates_and_reversed(self):
        with pytest.raises(ArgumentError):
            Graph(3, [(0, 1), (1, 0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ArgumentError):
            Graph(2, [(0, 2)])

    def test_edges_normalized_and_readonly(self):
        g = Graph(3, [(2, 0), (1, 0)])
        assert g.edges.tolist() == [[0, 1], [0, 2]]
        with pytest.raises(ValueError):
            g.edges[0, 0] = 5

    def test_adjacency_symmetric(self):
        a = triangle().adjacency()
        assert np.array_equal(a, a.T) and a.trace() == 0

    def test_equality_and_hash(self):
        assert Graph(3, [(0, 1)]) == Graph(3, [(1, 0)])
        assert hash(Graph(3, [(0, 1)])) == hash(Graph(3, [(1, 0)]))

    def test_label_consistency(self):
        with pytest.raises(ArgumentError):
            LabeledGraph(triangle(), Authenticity.REAL, "D", "ER", 0)
        with pytest.raises(ArgumentError):
            LabeledGraph(triangle(), Authenticity.GENERATED, "D", None, 0)

    def test_corpus_rejects_empty_graph(self):
        with pytest.raises(ArgumentError):
            corpus(real_items([Graph(0)]))


class TestDegrees:
    def test_examples(self):
        assert degree_sequence(triangle()) == [2, 2, 2]
        assert degree_sequence(star(3)) == [3, 1, 1, 1]
        assert degree_sequence(Graph(4)) == [0, 0, 0, 0]

    def test_handshake_on_random_graphs(self, rng):
        for _ in range(1000):
            g = random_graph(rng, int(rng.integers(1, 15)), rng.random())
            assert sum(degree_sequence(g)) == 2 * g.num_edges


class TestComponents:
    def test_examples(self):
        g = Graph(4, [(0, 1), (1, 2), (0, 2)])
        assert connected_components(g) == [{0, 1, 2}, {3}]
        assert connected_components(path(5)) == [set(range(5))]
        assert connected_components(Graph(0)) == []

    @given(graphs(max_n=10))
    def test_partition_matches_networkx(self, g):
        import networkx as nx
        G = nx.Graph()
        G.add_nodes_from(range(g.n))
        G.add_edges_from(g.edges.tolist())
        ours = sorted(map(sorted, connected_components(g)))
        ref = sorted(map(sorted, nx.connected_components(G)))
        assert ours == ref


class TestRelabel:
    def test_identity(self):
        g = star(4)
        assert relabel_nodes(g, list(range(g.n))) == g

    def test_triangle_any_permutation(self):
        for perm in ([1, 2, 0], [2, 1, 0], [0, 2, 1]):
            assert relabel_nodes(triangle(), perm) == triangle()

    def test_path_reverse(self):
        assert relabel_nodes(path(3), [2, 1, 0]).edge_set() == {(0, 1), (1, 2)}

    def test_not_bijection(self):
        with pytest.raises(ArgumentError):
            relabel_nodes(path(3), [0, 0, 1])


class TestSplit:
    def make(self, n):
        return corpus(real_items([path(2)] * n))

    def test_eighty_twenty(self):
        sp = split_corpus(self.make(100), 0.8, 1)
        assert (len(sp.train), len(sp.test)) == (80, 20)
        assert not {it.key for it in sp.train} & {it.key for it in sp.test}

    def test_rounding(self):
        sp = split_corpus(self.make(5), 0.8, 1)
        assert (len(sp.train), len(sp.test)) == (4, 1)

    def test_deterministic(self):
        a, b = split_corpus(self.make(30), 0.8, 7), split_corpus(self.make(30), 0.8, 7)
        assert [it.key for it in a.train] == [it.key for it in b.train]

    @given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 10**6))
    @settings(max_examples=50)
    def test_partition(self, n, f, seed):
        c = self.make(n)
        sp = split_corpus(c, f, seed)
        assert sorted(it.key for it in sp.train + sp.test) == sorted(it.key for it in c)
        assert abs(len(sp.train) - f * n) <= 1

    def test_too_small(self):
        with pytest.raises(SplitError):
            split_corpus(self.make(1), 0.8, 0)


class TestTUDataset:
    def test_fixture(self, tmp_path):
        d = write_tu(tmp_path, "FIX", [1, 1, 1, 2, 2], [(1, 2), (2, 3), (4, 5)])
        c = parse_tudataset(d)
        assert len(c) == 2
        assert c[0].graph == Graph(3, [(0, 1), (1, 2)])
        assert c[1].graph == Graph(2, [(0, 1)])
        assert all(it.is_real and it.dataset_id == "FIX" for it in c)

    def test_both_directions_deduplicated(self, tmp_path):
        d = write_tu(tmp_path, "DUP", [1, 1, 1], [(1, 2), (2, 1), (2, 3), (3, 2), (2, 3)])
        assert parse_tudataset(d)[0].graph.edge_set() == {(0, 1), (1, 2)}

    def test_self_loop_dropped(self, tmp_path, caplog):
        d = write_tu(tmp_path, "SL", [1, 1], [(1, 1), (1, 2)])
        with caplog.at_level("WARNING"):
            c = parse_tudataset(d)
        assert c[0].graph.edge_set() == {(0, 1)}
        assert "self-loop" in caplog.text

    def test_single_node_no_edges(self, tmp_path):
        d = write_tu(tmp_path, "ONE", [1], [])
        c = parse_tudataset(d)
        assert len(c) == 1 and c[0].graph.n == 1 and c[0].graph.num_edges == 0

    def test_missing_files(self, tmp_path):
        d = tmp_path / "EMPTY"
        d.mkdir()
        with pytest.raises(ParseError):
            parse_tudataset(d)

    def test_node_without_indicator(self, tmp_path):
        d = write_tu(tmp_path, "BAD", [1, 1], [(1, 3)])
        with pytest.raises(ParseError):
            parse_tudataset(d)

    def test_crlf_tolerated(self, tmp_path):
        d = tmp_path / "CR"
        d.mkdir()
        (d / "CR_graph_indicator.txt").write_bytes(b"1\r\n1\r\n")
        (d / "CR_A.txt").write_bytes(b"1, 2\r\n2, 1\r\n")
        assert parse_tudataset(d)[0].graph.edge_set() == {(0, 1)}


class TestJsonl:
    def test_round_trip(self, tmp_path, rng):
        items = real_items([random_graph(rng, 6) for _ in range(5)]) + \
            fake_items([random_graph(rng, 4) for _ in range(3)], "ER")
        c = corpus(items, seed=3)
        write_jsonl(c, tmp_path / "c.jsonl")
        back = read_jsonl(tmp_path / "c.jsonl", seed=3)
        assert back == c

    def test_record_fields(self):
        line = dumps_jsonl(corpus(fake_items([path(3)], "BA"))).strip()
        rec = json.loads(line)
        assert rec == {"n": 3, "edges": [[0, 1], [1, 2]], "authenticity": "generated", "dataset": "D",
                       "generator": "BA", "index": 0}

    def test_bad_line(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"n": 2, "edges": [[0, 0]], "authenticity": "real", "dataset": "D", "generator": null}\n')
        with pytest.raises(ParseError):
            read_jsonl(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            read_jsonl(tmp_path / "nope.jsonl")
