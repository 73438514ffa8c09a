import numpy as np
import pytest

from conftest import corpus, fake_items
from ggd.datasets import synthetic_corpus
from ggd.detectors import DetectorConfig
from ggd.errors import ArgumentError, ConfigError, LeakError
from ggd.generators import GeneratorSpec, er_generate, fit_generator
from ggd.graph import Graph
from ggd.scenarios import (
    ALL_KINDS, RESULT_COLUMNS, ScenarioConfig, ScenarioData, ScenarioKind, attribution_pairs, build_mixed,
    build_scenario, check_leak, evaluate, evaluate_arrays, rows_to_csv, run_attribution, run_matrix,
    split_evenly, summarize,
)

WS = {"source": "ws", "count": 80, "n_min": 12, "n_max": 20, "k": 4, "beta": 0.1}
SBM = {"source": "sbm", "count": 60, "n_min": 12, "n_max": 20, "p_in": 0.4, "p_out": 0.05}
SEEN = [{"id": "ER", "kind": "ER"}, {"id": "BA", "kind": "BA"}]
UNSEEN = [{"id": "WSr", "kind": "WS", "params": {"beta": 0.9}}]


@pytest.fixture(scope="module")
def reals():
    return {"A": synthetic_corpus("A", WS, 0), "B": synthetic_corpus("B", WS, 1), "U": synthetic_corpus("U", SBM, 2)}


def make_config(**kw):
    base = dict(seen_datasets=["A", "B"], unseen_datasets=["U"], seen_generators=SEEN, unseen_generators=UNSEEN,
                real_per_dataset=40, test_per_class=10, seed=3)
    base.update(kw)
    return ScenarioConfig(**base)


# -- metrics ---------------------------------------------------------------------

def test_evaluate_examples():
    m = evaluate([(1, 1)] * 3 + [(0, 1)] + [(1, 0)] + [(0, 0)] * 3)
    assert m.confusion == (3, 1, 1, 3)
    assert m.accuracy == 0.75 and m.f1 == 0.75
    perfect = evaluate([(1, 1), (0, 0)])
    assert perfect.accuracy == 1.0 and perfect.f1 == 1.0
    assert evaluate([(1, 0), (0, 0), (1, 0)]).f1 == 0.0


def test_evaluate_brute_force(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        y, p = rng.integers(0, 2, n), rng.integers(0, 2, n)
        tp = fp = fn = tn = 0
        for a, b in zip(y, p):
            if a == 1 and b == 1:
                tp += 1
            elif a == 0 and b == 1:
                fp += 1
            elif a == 1:
                fn += 1
            else:
                tn += 1
        m = evaluate_arrays(y, p)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        assert m.confusion == (tp, fp, fn, tn)
        assert m.accuracy == pytest.approx((tp + tn) / n)
        assert m.f1 == pytest.approx(f1)


def test_evaluate_empty():
    with pytest.raises(ArgumentError):
        evaluate([])


def test_split_evenly():
    assert split_evenly(10, 3) == [4, 3, 3]
    for total in range(30):
        for parts in range(1, 7):
            s = split_evenly(total, parts)
            assert sum(s) == total and max(s) - min(s) <= 1 and s == sorted(s, reverse=True)


# -- configuration ---------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    dict(unseen_datasets=["A"]),
    dict(unseen_generators=[{"id": "ER", "kind": "WS"}]),
    dict(seen_datasets=[]),
    dict(seen_generators=[]),
])
def test_config_errors(kw):
    with pytest.raises(ConfigError):
        make_config(**kw)


def test_config_round_trip():
    cfg = make_config()
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**cfg.to_dict(), "bogus": 1})


# -- scenario construction -------------------------------------------------------

@pytest.fixture(scope="module")
def data(reals):
    return ScenarioData(make_config(), reals)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_scenario_contracts(data, reals, kind):
    run = build_scenario(data.config, kind, reals, data=data)
    test = run.test
    labels = test.labels()
    assert abs(int(labels.sum()) - (len(labels) - int(labels.sum()))) <= 1
    check_leak(run.train, test)
    fakes = [it for it in test if not it.is_real]
    real_ds = {it.dataset_id for it in test if it.is_real}
    if kind in (ScenarioKind.CLOSED_WORLD, ScenarioKind.OPEN_GENERATOR):
        assert real_ds <= {"A", "B"}
    else:
        assert {it.dataset_id for it in test} == {"U"}
    if kind in (ScenarioKind.OPEN_GENERATOR, ScenarioKind.OPEN_WORLD):
        assert {it.generator_id for it in fakes} == {"WSr"}
    else:
        assert {it.generator_id for it in fakes} <= {"ER", "BA"}


def test_train_contents(data):
    train = data.train()
    assert {it.dataset_id for it in train} == {"A", "B"}
    assert {it.generator_id for it in train if not it.is_real} == {"ER", "BA"}
    assert set(train.labels()) == {0, 1}


def test_scenarios_deterministic(reals):
    a = build_scenario(make_config(), "OpenWorld", reals)
    b = build_scenario(make_config(), "OpenWorld", reals)
    assert [(it.key, it.graph) for it in a.test] == [(it.key, it.graph) for it in b.test]
    assert [(it.key, it.graph) for it in a.train] == [(it.key, it.graph) for it in b.train]


def test_missing_unseen_lists(reals):
    cfg = make_config(unseen_datasets=[], unseen_generators=[])
    build_scenario(cfg, "ClosedWorld", reals)
    for kind in ("OpenGenerator", "OpenSet", "OpenWorld"):
        with pytest.raises(ConfigError):
            build_scenario(cfg, kind, reals)


def test_leak_detected():
    items = fake_items([Graph(3)] * 4)
    with pytest.raises(LeakError):
        check_leak(corpus(items[:3]), corpus(items[2:]))


# -- mixed protocol --------------------------------------------------------------

def _mixed_inputs(n_datasets, per, gens):
    reals = {f"D{i}": synthetic_corpus(f"D{i}", {**WS, "count": per}, i) for i in range(n_datasets)}
    fitted = {ds: [fit_generator(GeneratorSpec(f"G{j}", "ER", {"edge_prob": 0.2, "n": 10}))
                   for j in range(gens)] for ds in reals}
    return reals, fitted


def test_build_mixed_even_split():
    reals, fitted = _mixed_inputs(2, 10, 3)
    mixed = build_mixed(reals, fitted, 10, seed=0)
    for ds in reals:
        fakes = [it.generator_id for it in mixed if it.dataset_id == ds and not it.is_real]
        assert [fakes.count(g) for g in ("G0", "G1", "G2")] == [4, 3, 3]
    assert [it.key for it in mixed] == [it.key for it in build_mixed(reals, fitted, 10, seed=0)]
    assert [it.key for it in mixed] != [it.key for it in build_mixed(reals, fitted, 10, seed=1)]


def test_build_mixed_divisibility():
    reals, fitted = _mixed_inputs(2, 13, 4)
    for per in range(1, 14):
        mixed = build_mixed(reals, fitted, per, seed=per)
        for ds in reals:
            own = [it for it in mixed if it.dataset_id == ds]
            assert sum(it.is_real for it in own) == per
            fakes = [it.generator_id for it in own if not it.is_real]
            assert [fakes.count(f"G{j}") for j in range(4)] == split_evenly(per, 4)


def test_build_mixed_filtered():
    reals, fitted = _mixed_inputs(1, 20, 2)
    mixed = build_mixed(reals, fitted, 10, seed=0, keep_fraction=0.2)
    assert sum(not it.is_real for it in mixed) == 10


def test_build_mixed_insufficient():
    reals, fitted = _mixed_inputs(1, 5, 2)
    with pytest.raises(ConfigError):
        build_mixed(reals, fitted, 6, seed=0)


# -- attribution -----------------------------------------------------------------

def _two_families(k=40):
    er = fake_items([er_generate(10, edge_prob=0.5, seed=s) for s in range(k)], generator="ER")
    empty = fake_items([Graph(10)] * k, generator="Empty")
    return corpus(er + empty)


def test_attribution_pairs_counts():
    a, b, same = attribution_pairs(_two_families(), 30, 50, 0)
    assert len(a) == 80 and same.sum() == 30


def test_run_attribution():
    cfg = DetectorConfig(epochs=10, lr=0.01, hidden_dims=[16], max_degree_bucket=10, n_ps=200)
    m = run_attribution(_two_families(), 200, 200, 0, cfg)
    assert m.total == 80 and m.confusion[0] + m.confusion[2] == 40
    assert m.accuracy >= 0.8


def test_run_attribution_single_generator():
    with pytest.raises(ConfigError):
        run_attribution(corpus(fake_items([Graph(4)] * 10)), 10, 10, 0)


# -- result matrix ---------------------------------------------------------------

def test_run_matrix_rows(reals):
    cfg = make_config(real_per_dataset=20, test_per_class=6)
    det = DetectorConfig(epochs=2, hidden_dims=[8], max_degree_bucket=8, n_ps=50, n_k=3, svm_epochs=20)
    rows = run_matrix(cfg, reals, seeds=(0, 1), detector_config=det, profile="t", timing=False)
    assert len(rows) == 4 * 4 * 2
    assert all(set(r) == set(RESULT_COLUMNS) for r in rows)
    again = run_matrix(cfg, reals, seeds=(0, 1), detector_config=det, profile="t", timing=False)
    assert rows_to_csv(rows) == rows_to_csv(again)
    summary = summarize(rows)
    assert len(summary) == 16 and all(s["seeds"] == 2 for s in summary)

