"""Train/test construction for the four seen/unseen regimes, metrics and the result matrix.

Training data is the same for every regime: reals from the seen datasets plus
fakes from the seen generators fitted on those datasets, split 8:2. The
regimes differ only in the test half:

* ClosedWorld     held-out seen reals + held-out seen-generator fakes
* OpenGenerator   held-out seen reals + unseen-generator fakes (seen datasets)
* OpenSet         unseen-dataset reals + seen-generator fakes refit on those datasets
* OpenWorld       unseen-dataset reals + unseen-generator fakes fitted on those datasets

Every (generator, dataset) pair owns one fake pool of a fixed size, sampled
once and quality-filtered, so a graph can never be drawn twice with two roles.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
import statistics
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ggd.detectors import DetectorConfig, MODEL_KINDS, predict_corpus, train_detector
from ggd.detectors.metric import fit_pairs, generator_key, sample_pair_indices
from ggd.errors import ArgumentError, ConfigError, LeakError
from ggd.generators import GeneratorSpec, fit_generator, sample
from ggd.graph import Corpus, split_corpus
from ggd.seeding import derive_seed
from ggd.stats import keep_count, knn_filter

log = logging.getLogger(__name__)


class ScenarioKind(str, enum.Enum):
    CLOSED_WORLD = "ClosedWorld"
    OPEN_GENERATOR = "OpenGenerator"
    OPEN_SET = "OpenSet"
    OPEN_WORLD = "OpenWorld"


ALL_KINDS = tuple(ScenarioKind)


def split_evenly(total: int, parts: int) -> list[int]:
    """``total`` split into ``parts`` near-equal counts, remainder to the earliest parts."""
    base, extra = divmod(int(total), int(parts))
    return [base + (1 if i < extra else 0) for i in range(parts)]


# -- metrics -------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1: float
    macro_f1: float
    confusion: tuple  # (TP, FP, FN, TN), real = positive

    @property
    def total(self) -> int:
        return int(sum(self.confusion))


def _f1(tp, fp, fn) -> float:
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def evaluate_arrays(y_true, y_pred, positive: int = 1) -> Metrics:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if y_true.size == 0 or y_true.shape != y_pred.shape:
        raise ArgumentError("evaluate needs matching, non-empty label vectors")
    pos_t, pos_p = y_true == positive, y_pred == positive
    tp = int(np.sum(pos_t & pos_p))
    fp = int(np.sum(~pos_t & pos_p))
    fn = int(np.sum(pos_t & ~pos_p))
    tn = int(np.sum(~pos_t & ~pos_p))
    acc = (tp + tn) / y_true.size
    f1 = _f1(tp, fp, fn)
    return Metrics(acc, f1, 0.5 * (f1 + _f1(tn, fn, fp)), (tp, fp, fn, tn))


def evaluate(predictions) -> Metrics:
    """Metrics from ``(true, predicted)`` pairs; label 1 (real) is the positive class."""
    pairs = list(predictions)
    if not pairs:
        raise ArgumentError("evaluate needs at least one prediction")
    y, yhat = zip(*pairs)
    return evaluate_arrays(y, yhat)


# -- configuration ---------------------------------------------------------------

@dataclass
class ScenarioConfig:
    seen_datasets: list
    unseen_datasets: list = field(default_factory=list)
    seen_generators: list = field(default_factory=list)  # GeneratorSpec
    unseen_generators: list = field(default_factory=list)
    real_per_dataset: int = 1000
    test_per_class: int = 2000
    fit_per_dataset: int | None = None
    keep_fraction: float = 0.2
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        self.seen_generators = [g if isinstance(g, GeneratorSpec) else GeneratorSpec.from_dict(g)
                                for g in self.seen_generators]
        self.unseen_generators = [g if isinstance(g, GeneratorSpec) else GeneratorSpec.from_dict(g)
                                  for g in self.unseen_generators]
        if set(self.seen_datasets) & set(self.unseen_datasets):
            raise ConfigError("seen and unseen dataset lists overlap")
        ids = [g.id for g in self.seen_generators + self.unseen_generators]
        if len(set(ids)) != len(ids):
            raise ConfigError("generator ids must be unique across seen and unseen lists")
        if not self.seen_datasets:
            raise ConfigError("at least one seen dataset is required")
        if not self.seen_generators:
            raise ConfigError("at least one seen generator is required")
        if self.real_per_dataset < 2 or self.test_per_class < 1:
            raise ConfigError("real_per_dataset must be >= 2 and test_per_class >= 1")

    def to_dict(self):
        return {
            "seen_datasets": list(self.seen_datasets),
            "unseen_datasets": list(self.unseen_datasets),
            "seen_generators": [g.to_dict() for g in self.seen_generators],
            "unseen_generators": [g.to_dict() for g in self.unseen_generators],
            "real_per_dataset": self.real_per_dataset,
            "test_per_class": self.test_per_class,
            "fit_per_dataset": self.fit_per_dataset,
            "keep_fraction": self.keep_fraction,
            "train_fraction": self.train_fraction,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown scenario config keys {sorted(unknown)}")
        return cls(**d)


@dataclass
class ScenarioRun:
    config: ScenarioConfig
    kind: ScenarioKind
    train: Corpus
    test: Corpus
    metrics: dict = field(default_factory=dict)
    wall_ms: dict = field(default_factory=dict)
    seed: int = 0


def check_leak(train: Corpus, test: Corpus) -> None:
    """No test item may share identity (dataset, generator, index) or graph object with a train item."""
    keys = {it.key for it in train}
    ids = {id(it) for it in train}
    clash = [it.key for it in test if it.key in keys or id(it) in ids]
    if clash:
        raise LeakError(f"{len(clash)} test graphs also appear in training, e.g. {clash[0]}")


# -- data assembly ---------------------------------------------------------------

class ScenarioData:
    """Lazily fitted generators and fake pools for one (config, seed)."""

    def __init__(self, config: ScenarioConfig, real_corpora: dict, trained_generators: dict | None = None):
        self.config = config
        self.real = real_corpora
        self.generators = dict(trained_generators or {})
        self._pools: dict = {}
        self._reals: dict = {}
        missing = [d for d in config.seen_datasets + config.unseen_datasets if d not in real_corpora]
        if missing:
            raise ConfigError(f"no real corpus for datasets {missing}")
        self._plan = self._pool_plan()

    @property
    def seed(self):
        return self.config.seed

    def _real_selection(self, ds: str):
        """(used, fit) real corpora of one dataset; ``used`` enters train/test, ``fit`` trains generators."""
        if ds in self._reals:
            return self._reals[ds]
        cfg = self.config
        corpus = self.real[ds]
        order = np.random.default_rng(derive_seed(self.seed, "reals", ds)).permutation(len(corpus))
        if ds in cfg.seen_datasets:
            need = cfg.real_per_dataset
        else:
            need = self._unseen_real_counts()[ds]
        if len(corpus) < need:
            raise ConfigError(f"dataset {ds} has {len(corpus)} graphs, {need} required")
        used = Corpus(tuple(corpus.items[i] for i in np.sort(order[:need])), corpus.seed)
        if ds in cfg.seen_datasets:
            fit = self.split(ds).train
        else:
            rest = order[need:]
            cap = cfg.fit_per_dataset or cfg.real_per_dataset
            # unseen datasets: fit on graphs not used for testing when there are any
            pick = np.sort(rest[:cap]) if len(rest) else np.sort(order[:cap])
            fit = Corpus(tuple(corpus.items[i] for i in pick), corpus.seed)
        self._reals[ds] = (used, fit)
        return used, fit

    def _unseen_real_counts(self) -> dict:
        counts = split_evenly(self.config.test_per_class, max(len(self.config.unseen_datasets), 1))
        return dict(zip(self.config.unseen_datasets, counts))

    def split(self, ds: str):
        """8:2 split of the selected seen reals of ``ds``."""
        key = ("split", ds)
        if key not in self._reals:
            corpus = self.real[ds]
            order = np.random.default_rng(derive_seed(self.seed, "reals", ds)).permutation(len(corpus))
            need = self.config.real_per_dataset
            if len(corpus) < need:
                raise ConfigError(f"dataset {ds} has {len(corpus)} graphs, {need} required")
            used = Corpus(tuple(corpus.items[i] for i in np.sort(order[:need])), corpus.seed)
            self._reals[key] = split_corpus(used, self.config.train_fraction, derive_seed(self.seed, "split", ds))
        return self._reals[key]

    def _pool_plan(self) -> dict:
        """Number of filtered fakes each (generator, dataset) pair must supply."""
        cfg = self.config
        plan = {}
        for ds in cfg.seen_datasets:
            for g, c in zip(cfg.seen_generators, split_evenly(cfg.real_per_dataset, len(cfg.seen_generators))):
                plan[(g.id, ds)] = c
            if cfg.unseen_generators:
                held = cfg.real_per_dataset - int(math.floor(cfg.train_fraction * cfg.real_per_dataset + 0.5))
                held = max(held, 1)
                for g, c in zip(cfg.unseen_generators, split_evenly(held, len(cfg.unseen_generators))):
                    plan[(g.id, ds)] = c
        per_ds = self._unseen_real_counts() if cfg.unseen_datasets else {}
        for ds in cfg.unseen_datasets:
            for gens in (cfg.seen_generators, cfg.unseen_generators):
                if gens:
                    for g, c in zip(gens, split_evenly(per_ds[ds], len(gens))):
                        plan[(g.id, ds)] = c
        return plan

    def spec(self, gen_id: str) -> GeneratorSpec:
        for g in self.config.seen_generators + self.config.unseen_generators:
            if g.id == gen_id:
                return g
        raise ConfigError(f"unknown generator {gen_id}")

    def generator(self, gen_id: str, ds: str):
        key = (gen_id, ds)
        if key not in self.generators:
            spec = self.spec(gen_id)
            _, fit = self._real_selection(ds)
            spec = replace(spec, seed=derive_seed(self.seed, spec.seed, "fit", gen_id, ds))
            t0 = time.perf_counter()
            self.generators[key] = fit_generator(spec, fit)
            log.info("fitted %s on %s in %.1fs", gen_id, ds, time.perf_counter() - t0)
        return self.generators[key]

    def pool(self, gen_id: str, ds: str) -> Corpus:
        """Filtered fakes of one generator on one dataset, exactly as many as the plan asks for."""
        key = (gen_id, ds)
        if key not in self._pools:
            need = self._plan[key]
            kf = self.config.keep_fraction
            raw = need
            while keep_count(raw, kf) < need:
                raw = max(raw + 1, int(math.ceil(need / kf)))
            fakes = sample(self.generator(gen_id, ds), raw, derive_seed(self.seed, "pool", gen_id, ds), ds)
            _, ref = self._real_selection(ds)
            kept = knn_filter(fakes, ref, kf) if kf < 1.0 else fakes
            self._pools[key] = Corpus(kept.items[:need], kept.seed)
        return self._pools[key]

    def seen_fake_split(self, ds: str):
        """Fakes of the seen generators on ``ds`` split to mirror the reals split."""
        key = ("fakesplit", ds)
        if key not in self._reals:
            fakes = Corpus(tuple(it for g in self.config.seen_generators for it in self.pool(g.id, ds)), self.seed)
            n_test = len(self.split(ds).test)
            sp = split_corpus(fakes, 1.0 - n_test / len(fakes), derive_seed(self.seed, "fakesplit", ds)) \
                if 0 < n_test < len(fakes) else None
            if sp is None:
                raise ConfigError(f"cannot split fakes of {ds}")
            self._reals[key] = sp
        return self._reals[key]

    def train(self) -> Corpus:
        items = []
        for ds in self.config.seen_datasets:
            items.extend(self.split(ds).train)
            items.extend(self.seen_fake_split(ds).train)
        return _shuffle(items, derive_seed(self.seed, "train"))

    def test(self, kind: ScenarioKind) -> Corpus:
        cfg = self.config
        kind = ScenarioKind(kind)
        if kind in (ScenarioKind.OPEN_GENERATOR, ScenarioKind.OPEN_WORLD) and not cfg.unseen_generators:
            raise ConfigError(f"{kind.value} needs unseen generators")
        if kind in (ScenarioKind.OPEN_SET, ScenarioKind.OPEN_WORLD) and not cfg.unseen_datasets:
            raise ConfigError(f"{kind.value} needs unseen datasets")
        reals, fakes = [], []
        if kind in (ScenarioKind.CLOSED_WORLD, ScenarioKind.OPEN_GENERATOR):
            for ds in cfg.seen_datasets:
                held = self.split(ds).test
                reals.extend(held)
                if kind is ScenarioKind.CLOSED_WORLD:
                    fakes.extend(self.seen_fake_split(ds).test)
                else:
                    for g in cfg.unseen_generators:
                        fakes.extend(self.pool(g.id, ds))
        else:
            gens = cfg.seen_generators if kind is ScenarioKind.OPEN_SET else cfg.unseen_generators
            for ds in cfg.unseen_datasets:
                used, _ = self._real_selection(ds)
                reals.extend(used)
                for g in gens:
                    fakes.extend(self.pool(g.id, ds))
        n = min(len(reals), len(fakes))
        return _shuffle(reals[:n] + fakes[:n], derive_seed(self.seed, "test", kind.value))


def _shuffle(items, seed) -> Corpus:
    order = np.random.default_rng(seed).permutation(len(items))
    return Corpus(tuple(items[i] for i in order), seed)


def build_scenario(config: ScenarioConfig, kind, real_corpora: dict, trained_generators: dict | None = None,
                   data: ScenarioData | None = None) -> ScenarioRun:
    """Train and test corpora for one regime; ``trained_generators`` maps (gen_id, dataset) to fitted generators."""
    data = data or ScenarioData(config, real_corpora, trained_generators)
    kind = ScenarioKind(kind)
    test = data.test(kind)
    train = data.train()
    check_leak(train, test)
    return ScenarioRun(config, kind, train, test, seed=config.seed)


def build_mixed(real_corpora: dict, trained_generators: dict, per_dataset: int, seed: int,
                keep_fraction: float | None = None) -> Corpus:
    """``per_dataset`` reals and ``per_dataset`` fakes from every dataset, fakes split evenly over its generators.

    ``trained_generators`` maps a dataset id to the ordered list of generators fitted on it.
    """
    items = []
    for ds in sorted(real_corpora):
        corpus = real_corpora[ds]
        if len(corpus) < per_dataset:
            raise ConfigError(f"dataset {ds} has {len(corpus)} graphs, {per_dataset} required")
        gens = list(trained_generators.get(ds, []))
        if not gens:
            raise ConfigError(f"no generators for dataset {ds}")
        pick = np.random.default_rng(derive_seed(seed, "mixed", ds)).permutation(len(corpus))[:per_dataset]
        items.extend(corpus.items[i] for i in np.sort(pick))
        for gen, count in zip(gens, split_evenly(per_dataset, len(gens))):
            if count == 0:
                continue
            s = derive_seed(seed, "mixed", ds, gen.spec.id)
            if keep_fraction is None:
                fakes = sample(gen, count, s, ds)
            else:
                raw = int(math.ceil(count / keep_fraction))
                fakes = knn_filter(sample(gen, raw, s, ds), corpus, keep_fraction)
            items.extend(fakes.items[:count])
    return _shuffle(items, derive_seed(seed, "mixed", "order"))


# -- attribution -----------------------------------------------------------------

def attribution_pairs(fakes: Corpus, n_pos: int, n_neg: int, seed: int):
    """Index arrays ``(a, b, same)`` with exactly ``n_pos`` same-generator and ``n_neg`` cross pairs."""
    n = max(n_pos, n_neg)
    a, b, same = sample_pair_indices([generator_key(it) for it in fakes], n, seed)
    keep = np.concatenate([np.arange(n_pos), n + np.arange(n_neg)])
    return a[keep], b[keep], same[keep]


def run_attribution(unseen_fakes: Corpus, n_pos: int, n_neg: int, seed: int,
                    config: DetectorConfig | None = None):
    """Train the metric model on same/different-generator pairs, report held-out pair metrics.

    Graphs are split 8:2 first so no held-out pair touches a training graph.
    """
    gens = {it.generator_id for it in unseen_fakes}
    if len(gens) < 2:
        raise ConfigError("attribution needs fakes from at least two generators")
    config = replace(config or DetectorConfig(), seed=seed)
    sp = split_corpus(unseen_fakes, 0.8, derive_seed(seed, "attr", "split"))
    tr_pos, tr_neg = int(math.floor(0.8 * n_pos + 0.5)), int(math.floor(0.8 * n_neg + 0.5))
    a, b, y = attribution_pairs(sp.train, tr_pos, tr_neg, derive_seed(seed, "attr", "train"))
    model = fit_pairs(sp.train.graphs, a, b, y.astype(np.float64), config, "attribution")
    ta, tb, ty = attribution_pairs(sp.test, n_pos - tr_pos, n_neg - tr_neg, derive_seed(seed, "attr", "test"))
    emb = model.embed(sp.test.graphs)
    p = model.pair_posteriors(emb[ta], emb[tb])
    pred = (p >= 0.5).astype(np.int64)
    return evaluate_arrays(ty, pred)


# -- result matrix ---------------------------------------------------------------

RESULT_COLUMNS = ("scenario", "model", "dataset_profile", "seed", "accuracy", "f1", "macro_f1",
                  "train_size", "test_size", "wall_ms")


def run_matrix(config: ScenarioConfig, real_corpora: dict, kinds=ALL_KINDS, models=MODEL_KINDS,
               seeds=(0,), detector_config: DetectorConfig | None = None, profile: str = "custom",
               timing: bool = True) -> list[dict]:
    """Every (seed, scenario, model) cell; one trained model per (seed, model) serves all regimes."""
    detector_config = detector_config or DetectorConfig()
    rows = []
    for seed in seeds:
        cfg = replace(config, seed=seed)
        data = ScenarioData(cfg, real_corpora)
        train = data.train()
        tests = {}
        for kind in kinds:
            tests[ScenarioKind(kind)] = data.test(kind)
            check_leak(train, tests[ScenarioKind(kind)])
        for model_kind in models:
            t0 = time.perf_counter()
            model = train_detector(model_kind, train, replace(detector_config, seed=seed))
            train_ms = (time.perf_counter() - t0) * 1000.0
            for kind in kinds:
                kind = ScenarioKind(kind)
                test = tests[kind]
                t1 = time.perf_counter()
                pred = predict_corpus(model, test.graphs)
                m = evaluate_arrays(test.labels(), pred)
                wall = train_ms + (time.perf_counter() - t1) * 1000.0
                rows.append({
                    "scenario": kind.value, "model": model_kind, "dataset_profile": profile, "seed": seed,
                    "accuracy": m.accuracy, "f1": m.f1, "macro_f1": m.macro_f1,
                    "train_size": len(train), "test_size": len(test),
                    "wall_ms": int(round(wall)) if timing else 0,
                })
                log.info("seed %s %s %s acc %.4f", seed, kind.value, model_kind, m.accuracy)
    return rows


def _fmt(v):
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def rows_to_csv(rows, columns=RESULT_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def summarize(rows) -> list[dict]:
    """Mean and sample stdev of accuracy/F1 over seeds per (scenario, model)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["scenario"], r["model"], r["dataset_profile"]), []).append(r)
    out = []
    for (scen, model, prof), rs in groups.items():
        row = {"scenario": scen, "model": model, "dataset_profile": prof, "seeds": len(rs)}
        for metric in ("accuracy", "f1", "macro_f1"):
            vals = [r[metric] for r in rs]
            row[f"{metric}_mean"] = statistics.fmean(vals)
            row[f"{metric}_std"] = statistics.stdev(vals) if len(vals) > 1 else 0.0
        out.append(row)
    return out


SUMMARY_COLUMNS = ("scenario", "model", "dataset_profile", "seeds", "accuracy_mean", "accuracy_std",
                   "f1_mean", "f1_std", "macro_f1_mean", "macro_f1_std")
