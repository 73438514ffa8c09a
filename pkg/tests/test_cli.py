import argparse
import csv
import json
from pathlib import Path

import pytest

from ggd.cli import build_parser, main

ROOT = Path(__file__).resolve().parents[1]

SMALL_EXPERIMENT = {
    "datasets": {
        "WS": {"source": "ws", "count": 60, "n_min": 12, "n_max": 20, "k": 4, "beta": 0.1},
        "SBM": {"source": "sbm", "count": 40, "n_min": 12, "n_max": 20, "p_in": 0.4, "p_out": 0.05},
    },
    "seen_datasets": ["WS"],
    "unseen_datasets": ["SBM"],
    "seen_generators": [{"id": "ER", "kind": "ER"}, {"id": "BA", "kind": "BA"}],
    "unseen_generators": [{"id": "WSr", "kind": "WS", "params": {"beta": 0.9}}],
    "real_per_dataset": 30,
    "test_per_class": 8,
    "fit_per_dataset": 20,
    "seeds": [0, 1],
    "detector": {"epochs": 2, "hidden_dims": [8], "max_degree_bucket": 8, "n_ps": 50, "n_k": 3,
                 "svm_epochs": 20},
}


def subparsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for name, sp in action.choices.items():
                yield name, sp
                yield from ((f"{name} {n}", s) for n, s in subparsers(sp))


def option_strings(parser):
    return {o for a in parser._actions for o in a.option_strings if o.startswith("--") and o != "--help"}


def run(argv):
    return main([str(a) for a in argv])


# -- documentation parity --------------------------------------------------------

def test_help_lists_every_flag():
    parser = build_parser()
    for name, sp in [("ggd", parser)] + list(subparsers(parser)):
        text = sp.format_help()
        for opt in option_strings(sp):
            assert opt in text, f"{name}: {opt} missing from help"


def test_readme_documents_every_flag():
    readme = (ROOT / "README.md").read_text()
    parser = build_parser()
    for name, sp in [("ggd", parser)] + list(subparsers(parser)):
        if name != "ggd":
            assert f"ggd {name}" in readme, f"command {name} undocumented"
        for opt in option_strings(sp):
            assert opt in readme, f"{name}: {opt} undocumented"


# -- exit codes ------------------------------------------------------------------

def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["stats", "--input", "x", "--out", "y", "--nope"])
    assert exc.value.code == 2


def test_missing_file_exit_3(tmp_path, capsys):
    assert run(["stats", "--input", tmp_path / "missing.jsonl", "--out", tmp_path / "o.csv"]) == 3
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: ParseError:")


def test_validation_exit_4(tmp_path, capsys):
    assert run(["generate", "--kind", "ER", "--param", "n=5", "--param", "edge_prob=2", "--count", 3,
                "--out", tmp_path / "o.jsonl"]) == 4
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["scenario", "run", "--config", cfg, "--out", tmp_path / "r.csv"]) == 4


def test_announces_resolved_config(tmp_path, capsys):
    assert run(["corpus", "--dataset", "WS", "--out", tmp_path / "ws.jsonl"]) == 0
    first = json.loads(capsys.readouterr().out.splitlines()[0])
    assert first["command"] == "corpus"
    assert first["config"]["spec"]["count"] == 2000


# -- end-to-end pipeline and determinism -----------------------------------------

def pipeline(d: Path):
    """Every command once; returns the output files."""
    d.mkdir()
    exp = d / "exp.json"
    exp.write_text(json.dumps(SMALL_EXPERIMENT))
    det = d / "det.json"
    det.write_text(json.dumps(SMALL_EXPERIMENT["detector"]))
    steps = [
        ["corpus", "--dataset", "WS", "--config", exp, "--out", d / "real.jsonl"],
        ["generate", "--kind", "BA", "--reference", d / "real.jsonl", "--count", 40, "--dataset-id", "WS",
         "--out", d / "ba.jsonl"],
        ["generate", "--kind", "VGAE", "--param", "epochs=2", "--reference", d / "real.jsonl", "--count", 20,
         "--save", d / "vgae.bin", "--out", d / "vgae.jsonl"],
        ["generate", "--load", d / "vgae.bin", "--count", 20, "--out", d / "vgae2.jsonl"],
        ["stats", "--input", d / "ba.jsonl", "--out", d / "stats.csv"],
        ["filter", "--generated", d / "ba.jsonl", "--real", d / "real.jsonl", "--out", d / "kept.jsonl"],
        ["mmd", "--a", d / "ba.jsonl", "--b", d / "real.jsonl", "--out", d / "mmd.json"],
        ["train", "--model", "e2e", "--train", d / "mixed.jsonl", "--detector-config", det,
         "--out", d / "e2e.bin"],
        ["train", "--model", "metric", "--train", d / "mixed.jsonl", "--detector-config", det,
         "--out", d / "metric.bin"],
        ["predict", "--model", d / "e2e.bin", "--input", d / "mixed.jsonl", "--out", d / "pred.csv"],
        ["predict", "--model", d / "metric.bin", "--input", d / "mixed.jsonl", "--out", d / "pred_m.csv"],
        ["embed", "--model", d / "e2e.bin", "--input", d / "mixed.jsonl", "--out", d / "emb.csv"],
        ["scenario", "run", "--config", exp, "--out", d / "results.csv", "--summary", d / "summary.csv",
         "--no-timing"],
        ["sweep", "--param", "n_k", "--values", "1,2,3", "--config", exp, "--out", d / "sweep.csv"],
        ["attribution", "--input", d / "fakes.jsonl", "--pos", 40, "--neg", 40, "--detector-config", det,
         "--out", d / "attr.json"],
    ]
    for argv in steps:
        if argv[0] == "train" and not (d / "mixed.jsonl").exists():
            real = (d / "real.jsonl").read_text().splitlines()[:40]
            (d / "mixed.jsonl").write_text("\n".join(real + (d / "ba.jsonl").read_text().splitlines()) + "\n")
        if argv[0] == "attribution":
            lines = (d / "ba.jsonl").read_text().splitlines() + (d / "vgae.jsonl").read_text().splitlines()
            (d / "fakes.jsonl").write_text("\n".join(lines) + "\n")
        assert run(argv) == 0, argv
    return sorted(p for p in d.iterdir() if p.suffix in (".jsonl", ".csv", ".json", ".bin"))


@pytest.fixture(scope="module")
def twice(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    return pipeline(base / "a"), pipeline(base / "b")


def test_every_output_byte_identical(twice):
    a, b = twice
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes(), pa.name


def test_output_shapes(twice):
    files = {p.name: p for p in twice[0]}
    results = list(csv.DictReader(files["results.csv"].open()))
    assert len(results) == 4 * 4 * 2
    assert list(results[0]) == ["scenario", "model", "dataset_profile", "seed", "accuracy", "f1", "macro_f1",
                                "train_size", "test_size", "wall_ms"]
    assert len(list(csv.DictReader(files["sweep.csv"].open()))) == 3
    assert len(list(csv.DictReader(files["summary.csv"].open()))) == 16
    emb = list(csv.reader(files["emb.csv"].open()))
    assert len(emb[0]) == 4 + 128
    assert len(files["vgae.jsonl"].read_text().splitlines()) == 20
    assert files["vgae.jsonl"].read_bytes() == files["vgae2.jsonl"].read_bytes()
    assert len(files["kept.jsonl"].read_text().splitlines()) == 8
    pred = list(csv.DictReader(files["pred.csv"].open()))
    assert list(pred[0]) == ["graph_id", "dataset", "authenticity", "generator", "predicted", "score"]
    attr = json.loads(files["attr.json"].read_text())
    assert set(attr) == {"accuracy", "f1", "macro_f1", "confusion"}


def test_inputs_not_mutated(tmp_path):
    src = tmp_path / "g.jsonl"
    assert run(["generate", "--kind", "ER", "--param", "n=6", "--param", "edge_prob=0.5", "--count", 5,
                "--out", src]) == 0
    before = src.read_bytes()
    assert run(["filter", "--generated", src, "--real", src, "--keep", 0.4, "--out", tmp_path / "k.jsonl"]) == 0
    assert src.read_bytes() == before
    assert sorted(p.name for p in tmp_path.iterdir()) == ["g.jsonl", "k.jsonl"]
