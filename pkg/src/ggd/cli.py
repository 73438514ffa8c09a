"""``ggd`` command line.

Every command prints its resolved configuration as one JSON line before it
runs, writes outputs atomically and exits 0 on success, 2 on usage errors, 3 on
I/O or parse failures and 4 on validation failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

from threadpoolctl import threadpool_limits

from ggd.datasets import data_root, load_dataset
from ggd.detectors import (
    MODEL_KINDS, ContrastiveModel, DetectorConfig, MetricModel, load_detector, metric_predict_many,
    predict_corpus, save_detector, train_detector, write_embeddings,
)
from ggd.detectors.common import REAL
from ggd.detectors.metric import train_metric
from ggd.errors import GGDError, ParseError
from ggd.generators import KINDS, GeneratorSpec, fit_generator, load_generator, sample, save_generator
from ggd.graph import atomic_write_text, read_jsonl, write_jsonl
from ggd.profiles import PROFILES, real_corpora, resolve_experiment, scenario_config
from ggd.scenarios import (
    ALL_KINDS, SUMMARY_COLUMNS, ScenarioData, ScenarioKind, check_leak,
    evaluate_arrays, rows_to_csv, run_attribution, run_matrix, summarize,
)
from ggd.stats import FEATURE_NAMES, feature_matrix, knn_filter, mmd

log = logging.getLogger("ggd")

SWEEP_PARAMS = ("n_k", "n_ps")


def _read_json(path):
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"missing file: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: invalid JSON ({exc})") from None


def _announce(command: str, resolved: dict) -> None:
    print(json.dumps({"command": command, "config": resolved}, sort_keys=True, default=str))
    sys.stdout.flush()


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _parse_params(pairs) -> dict:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _graph_id(it) -> str:
    return f"{it.dataset_id}:{it.generator_id or 'real'}:{it.index}"


def _detector_config(args, profile_name: str) -> DetectorConfig:
    base = dict(PROFILES[profile_name]["detector"])
    if getattr(args, "detector_config", None):
        base.update(_read_json(args.detector_config))
    if getattr(args, "epochs", None) is not None:
        base["epochs"] = args.epochs
    base["seed"] = args.seed if args.seed is not None else base.get("seed", 0)
    return DetectorConfig.from_dict(base)


# -- commands ----------------------------------------------------------------------

def cmd_corpus(args) -> int:
    if args.tu:
        name = Path(args.tu).name
        spec = {"source": "tu", "path": str(Path(args.tu).resolve())}
    else:
        exp = resolve_experiment(_read_json(args.config) if args.config else None, args.profile)
        if args.dataset not in exp["datasets"]:
            raise GGDError(f"dataset {args.dataset!r} is not defined in the {exp['profile']} profile")
        name, spec = args.dataset, exp["datasets"][args.dataset]
    seed = args.seed if args.seed is not None else 0
    _announce("corpus", {"dataset": name, "spec": spec, "seed": seed, "out": args.out,
                         "data_dir": str(data_root())})
    write_jsonl(load_dataset(name, spec, seed), args.out)
    return 0


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.load:
        gen = load_generator(args.load)
    else:
        if args.spec:
            d = _read_json(args.spec)
            d.setdefault("seed", seed)
            spec = GeneratorSpec.from_dict(d)
        elif args.kind:
            spec = GeneratorSpec(args.id or args.kind, args.kind, _parse_params(args.param), seed)
        else:
            raise GGDError("give --spec, --kind or --load")
        reference = read_jsonl(args.reference) if args.reference else None
        gen = fit_generator(spec, reference)
    _announce("generate", {"generator": gen.spec.to_dict(), "count": args.count, "seed": seed,
                           "dataset_id": args.dataset_id, "reference": args.reference, "load": args.load,
                           "save": args.save, "out": args.out})
    if args.save:
        save_generator(args.save, gen)
    write_jsonl(sample(gen, args.count, seed, args.dataset_id), args.out)
    return 0


def cmd_stats(args) -> int:
    _announce("stats", {"input": args.input, "out": args.out})
    corpus = read_jsonl(args.input)
    feats = feature_matrix(corpus)
    rows = [[_graph_id(it)] + [repr(float(v)) for v in feats[i]] for i, it in enumerate(corpus)]
    atomic_write_text(args.out, _csv(("graph_id",) + FEATURE_NAMES, rows))
    return 0


def cmd_filter(args) -> int:
    _announce("filter", {"generated": args.generated, "real": args.real, "keep": args.keep, "out": args.out})
    kept = knn_filter(read_jsonl(args.generated), read_jsonl(args.real), args.keep)
    write_jsonl(kept, args.out)
    return 0


def cmd_mmd(args) -> int:
    _announce("mmd", {"a": args.a, "b": args.b, "bandwidth": args.bandwidth, "out": args.out})
    r = mmd(read_jsonl(args.a), read_jsonl(args.b), args.bandwidth)
    text = json.dumps({"mmd": r.value, "bandwidth": r.bandwidth, "fallback": r.fallback}, sort_keys=True) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args) -> int:
    config = _detector_config(args, args.profile)
    _announce("train", {"model": args.model, "train": args.train, "out": args.out, "detector": config.to_dict()})
    train = read_jsonl(args.train)
    model = train_detector(args.model, train, config)
    save_detector(args.out, model)
    return 0


def _scores(model, graphs):
    """Predicted labels and one real-vs-generated score per graph."""
    if isinstance(model, MetricModel):
        labels, means = metric_predict_many(model, graphs)
        return labels, means[:, REAL] - means[:, 1 - REAL]
    if isinstance(model, ContrastiveModel):
        return predict_corpus(model, graphs), model.scores(graphs)
    p = model.posteriors(graphs)
    return predict_corpus(model, graphs), p[:, REAL]


def cmd_predict(args) -> int:
    _announce("predict", {"model": args.model, "input": args.input, "out": args.out})
    model = load_detector(args.model)
    corpus = read_jsonl(args.input)
    labels, score = _scores(model, corpus.graphs)
    rows = [[_graph_id(it), it.dataset_id, it.authenticity.value, it.generator_id or "",
             "real" if labels[i] == REAL else "generated", repr(float(score[i]))] for i, it in enumerate(corpus)]
    atomic_write_text(args.out, _csv(("graph_id", "dataset", "authenticity", "generator", "predicted", "score"),
                                     rows))
    m = evaluate_arrays(corpus.labels(), labels)
    print(json.dumps({"accuracy": m.accuracy, "f1": m.f1, "macro_f1": m.macro_f1,
                      "confusion": list(m.confusion)}, sort_keys=True))
    return 0


def cmd_embed(args) -> int:
    _announce("embed", {"model": args.model, "input": args.input, "out": args.out})
    write_embeddings(load_detector(args.model), read_jsonl(args.input), args.out)
    return 0


def _experiment(args) -> dict:
    exp = resolve_experiment(_read_json(args.config) if args.config else None, args.profile)
    if args.seed is not None:
        exp["seeds"] = [args.seed]
    exp["detector"] = DetectorConfig.from_dict(exp["detector"]).to_dict()
    return exp


def cmd_scenario(args) -> int:
    exp = _experiment(args)
    if args.scenarios:
        exp["scenarios"] = args.scenarios
    if args.models:
        exp["models"] = args.models
    _announce("scenario run", {"experiment": exp, "out": args.out, "summary": args.summary,
                               "timing": not args.no_timing})
    detector = DetectorConfig.from_dict(exp["detector"])
    rows = run_matrix(scenario_config(exp, exp["seeds"][0]), real_corpora(exp), kinds=exp["scenarios"],
                      models=exp["models"], seeds=exp["seeds"], detector_config=detector,
                      profile=exp["profile"], timing=not args.no_timing)
    atomic_write_text(args.out, rows_to_csv(rows))
    if args.summary:
        atomic_write_text(args.summary, rows_to_csv(summarize(rows), SUMMARY_COLUMNS))
    return 0


def cmd_sweep(args) -> int:
    exp = _experiment(args)
    values = [int(v) for v in args.values.split(",") if v.strip()]
    if not values or min(values) < 1 or len(set(values)) != len(values):
        raise GGDError("--values needs distinct positive integers")
    kind = ScenarioKind(args.scenario)
    _announce("sweep", {"experiment": exp, "param": args.param, "values": values, "scenario": kind.value,
                        "out": args.out})
    corpora = real_corpora(exp)
    per_value = {v: [] for v in values}
    for seed in exp["seeds"]:
        data = ScenarioData(scenario_config(exp, seed), corpora)
        train, test = data.train(), data.test(kind)
        check_leak(train, test)
        base = replace(DetectorConfig.from_dict(exp["detector"]), seed=seed)
        model = None
        for v in values:
            if args.param == "n_ps" or model is None:
                cfg = replace(base, n_ps=v) if args.param == "n_ps" else base
                model = train_metric(train, cfg)
            n_k = v if args.param == "n_k" else base.n_k
            labels, _ = metric_predict_many(model, test.graphs, train, n_k, seed)
            per_value[v].append(evaluate_arrays(test.labels(), labels))
    # one row per value, metrics averaged over seeds
    rows = [[args.param, v, kind.value, len(ms)] + [f"{statistics.fmean(getattr(m, k) for m in ms):.6f}"
                                                   for k in ("accuracy", "f1", "macro_f1")]
            for v, ms in per_value.items()]
    atomic_write_text(args.out, _csv(("param", "value", "scenario", "seeds", "accuracy", "f1", "macro_f1"), rows))
    return 0


def cmd_attribution(args) -> int:
    config = _detector_config(args, args.profile)
    _announce("attribution", {"input": args.input, "pos": args.pos, "neg": args.neg, "out": args.out,
                              "detector": config.to_dict()})
    m = run_attribution(read_jsonl(args.input), args.pos, args.neg, config.seed, config)
    text = json.dumps({"accuracy": m.accuracy, "f1": m.f1, "macro_f1": m.macro_f1,
                       "confusion": list(m.confusion)}, sort_keys=True) + "\n"
    atomic_write_text(args.out, text)
    return 0


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ggd", description="Generated-graph detection toolkit.")
    p.add_argument("--seed", type=int, default=None, help="experiment seed (default 0; overrides profile seeds)")
    p.add_argument("--threads", type=int, default=None, help="cap on BLAS worker threads")
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk", help="bundled default profile")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("corpus", help="materialize a real corpus as JSONL")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="dataset name from the profile or --config")
    src.add_argument("--tu", help="TUDataset directory to import")
    s.add_argument("--config", help="experiment JSON defining datasets")
    s.add_argument("--out", required=True, help="output JSONL")
    s.set_defaults(func=cmd_corpus)

    s = sub.add_parser("generate", help="fit (or load) a generator and sample graphs")
    s.add_argument("--spec", help="generator spec JSON (id, kind, params, seed)")
    s.add_argument("--kind", choices=KINDS, help="generator family")
    s.add_argument("--id", help="generator id (default: the kind)")
    s.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
    s.add_argument("--reference", help="real corpus JSONL to fit on")
    s.add_argument("--load", help="saved generator to sample from")
    s.add_argument("--save", help="write the fitted generator here")
    s.add_argument("--count", type=int, required=True, help="number of graphs")
    s.add_argument("--dataset-id", default="", help="dataset id stamped on the samples")
    s.add_argument("--out", required=True, help="output JSONL")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("stats", help="six statistical features per graph")
    s.add_argument("--input", required=True, help="corpus JSONL")
    s.add_argument("--out", required=True, help="output CSV")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("filter", help="keep generated graphs nearest to the real set")
    s.add_argument("--generated", required=True, help="generated corpus JSONL")
    s.add_argument("--real", required=True, help="real corpus JSONL")
    s.add_argument("--keep", type=float, default=0.2, help="fraction kept (default 0.2)")
    s.add_argument("--out", required=True, help="output JSONL")
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("mmd", help="feature MMD between two corpora")
    s.add_argument("--a", required=True, help="first corpus JSONL")
    s.add_argument("--b", required=True, help="second corpus JSONL")
    s.add_argument("--bandwidth", type=float, default=None, help="kernel bandwidth (default: median heuristic)")
    s.add_argument("--out", help="output JSON (default: stdout)")
    s.set_defaults(func=cmd_mmd)

    s = sub.add_parser("train", help="train a detector")
    s.add_argument("--model", choices=MODEL_KINDS, required=True, help="detector kind")
    s.add_argument("--train", required=True, help="labelled training corpus JSONL")
    s.add_argument("--detector-config", help="detector config JSON")
    s.add_argument("--epochs", type=int, default=None, help="override training epochs")
    s.add_argument("--out", required=True, help="output model file")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="label graphs with a trained detector")
    s.add_argument("--model", required=True, help="model file")
    s.add_argument("--input", required=True, help="corpus JSONL")
    s.add_argument("--out", required=True, help="output CSV")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("embed", help="export 128-dim graph embeddings")
    s.add_argument("--model", required=True, help="model file (GNN detectors only)")
    s.add_argument("--input", required=True, help="corpus JSONL")
    s.add_argument("--out", required=True, help="output CSV")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("scenario", help="scenario experiments")
    ssub = s.add_subparsers(dest="action", required=True)
    r = ssub.add_parser("run", help="scenario x model x seed matrix")
    r.add_argument("--config", help="experiment JSON (default: the profile)")
    r.add_argument("--scenarios", nargs="+", choices=[k.value for k in ALL_KINDS], help="subset of scenarios")
    r.add_argument("--models", nargs="+", choices=MODEL_KINDS, help="subset of models")
    r.add_argument("--out", required=True, help="results CSV")
    r.add_argument("--summary", help="mean/stdev CSV over seeds")
    r.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for byte-stable output")
    r.set_defaults(func=cmd_scenario)

    s = sub.add_parser("sweep", help="metric-model accuracy over n_k or n_ps")
    s.add_argument("--param", choices=SWEEP_PARAMS, required=True, help="parameter to sweep")
    s.add_argument("--values", required=True, help="comma-separated integers")
    s.add_argument("--config", help="experiment JSON (default: the profile)")
    s.add_argument("--scenario", choices=[k.value for k in ALL_KINDS], default="ClosedWorld",
                   help="scenario evaluated (default ClosedWorld)")
    s.add_argument("--out", required=True, help="output CSV")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("attribution", help="same-generator pair prediction on generated graphs")
    s.add_argument("--input", required=True, help="generated corpus JSONL (two or more generators)")
    s.add_argument("--pos", type=int, required=True, help="same-generator pairs")
    s.add_argument("--neg", type=int, required=True, help="different-generator pairs")
    s.add_argument("--detector-config", help="detector config JSON")
    s.add_argument("--epochs", type=int, default=None, help="override training epochs")
    s.add_argument("--out", required=True, help="output JSON")
    s.set_defaults(func=cmd_attribution)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        with threadpool_limits(limits=args.threads):
            code = args.func(args)
    except GGDError as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: OSError: {exc}".replace("\n", " "), file=sys.stderr)
        return 3
    log.info("done in %.1fs", time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
