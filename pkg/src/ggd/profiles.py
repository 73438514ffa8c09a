"""Bundled experiment profiles.

``desk`` runs offline in minutes on synthetic "real" families. ``paper`` points
at the seven TUDataset corpora under ``$GGD_DATA_DIR`` with full-size counts
and the paper-scale training defaults.
"""
from __future__ import annotations

import copy

from ggd.datasets import load_dataset
from ggd.detectors import MODEL_KINDS
from ggd.errors import ConfigError
from ggd.scenarios import ScenarioConfig

DESK = {
    "profile": "desk",
    "data_seed": 0,
    "datasets": {
        "WS": {"source": "ws", "count": 2000, "n_min": 20, "n_max": 40, "k": 4, "beta": 0.1},
        "SBM": {"source": "sbm", "count": 600, "n_min": 20, "n_max": 40, "p_in": 0.3, "p_out": 0.05},
    },
    "seen_datasets": ["WS"],
    "unseen_datasets": ["SBM"],
    "seen_generators": [
        {"id": "ER", "kind": "ER", "params": {}},
        {"id": "BA", "kind": "BA", "params": {}},
        {"id": "VGAE", "kind": "VGAE", "params": {"epochs": 30}},
    ],
    "unseen_generators": [
        {"id": "Graphite", "kind": "Graphite", "params": {"epochs": 30}},
        {"id": "GraphRNN_S", "kind": "GraphRNN_S", "params": {"epochs": 30}},
    ],
    "real_per_dataset": 300,
    "test_per_class": 100,
    "fit_per_dataset": 300,
    "keep_fraction": 0.2,
    "train_fraction": 0.8,
    "scenarios": ["ClosedWorld", "OpenGenerator", "OpenSet", "OpenWorld"],
    "models": list(MODEL_KINDS),
    "seeds": [0, 1, 2],
    "detector": {"epochs": 20, "n_ps": 1000, "n_k": 10},
}

PAPER = {
    "profile": "paper",
    "data_seed": 0,
    "datasets": {
        "AIDS": {"source": "tu", "path": "AIDS"},
        "Alchemy": {"source": "tu", "path": "alchemy_full"},
        "Deezer": {"source": "tu", "path": "deezer_ego_nets"},
        "DBLP": {"source": "tu", "path": "DBLP_v1"},
        "GitHub": {"source": "tu", "path": "github_stargazers"},
        "COLLAB": {"source": "tu", "path": "COLLAB"},
        "Twitch": {"source": "tu", "path": "twitch_egos"},
    },
    "seen_datasets": ["AIDS", "Alchemy", "Deezer", "DBLP", "GitHub"],
    "unseen_datasets": ["COLLAB", "Twitch"],
    "seen_generators": [
        {"id": "ER", "kind": "ER", "params": {}},
        {"id": "BA", "kind": "BA", "params": {}},
        {"id": "VGAE", "kind": "VGAE", "params": {}},
        {"id": "Graphite", "kind": "Graphite", "params": {}},
    ],
    "unseen_generators": [
        {"id": "GraphRNN_S", "kind": "GraphRNN_S", "params": {}},
    ],
    "real_per_dataset": 1000,
    "test_per_class": 2000,
    "fit_per_dataset": 1000,
    "keep_fraction": 0.2,
    "train_fraction": 0.8,
    "scenarios": ["ClosedWorld", "OpenGenerator", "OpenSet", "OpenWorld"],
    "models": list(MODEL_KINDS),
    "seeds": [0, 1, 2],
    "detector": {},
}

PROFILES = {"desk": DESK, "paper": PAPER}

EXPERIMENT_KEYS = set(DESK)


def profile(name: str) -> dict:
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}")
    return copy.deepcopy(PROFILES[name])


def resolve_experiment(user: dict | None, profile_name: str = "desk") -> dict:
    """Profile defaults overlaid with the user's experiment file (top-level keys replace, ``detector`` merges)."""
    exp = profile(user.get("profile", profile_name) if user else profile_name)
    user = dict(user or {})
    unknown = set(user) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown experiment keys {sorted(unknown)}")
    detector = {**exp["detector"], **user.pop("detector", {})}
    exp.update(user)
    exp["detector"] = detector
    return exp


def real_corpora(exp: dict) -> dict:
    names = list(exp["seen_datasets"]) + list(exp["unseen_datasets"])
    return {n: load_dataset(n, exp["datasets"][n], exp["data_seed"]) for n in names}


def scenario_config(exp: dict, seed: int) -> ScenarioConfig:
    keys = ("seen_datasets", "unseen_datasets", "seen_generators", "unseen_generators", "real_per_dataset",
            "test_per_class", "fit_per_dataset", "keep_fraction", "train_fraction")
    return ScenarioConfig(**{k: exp[k] for k in keys}, seed=seed)
