"""Desk-scale training runs shared by the smoke-training and ablation acceptance tests.

Each (seed, topology) run is cached under ``.smoke_cache/`` keyed by the
training config, the dataset recipe and a hash of the library sources that
influence training, so a cached result is only reused when re-running would
reproduce it exactly. Run this file directly to fill the cache ahead of time:

    python tests/smoke_runs.py            # all seeds, both encodings
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import colourlab
from colourlab.datasets import generate_graphs
from colourlab.dqn import TrainConfig, train

ROOT = Path(__file__).resolve().parents[1]
CACHE = ROOT / ".smoke_cache"

EPISODES = 2000
N_RANGE = (10, 15)
SEEDS = (0, 1, 2)
TRAIN_COUNT, TRAIN_SEED = 500, 7001
VAL_COUNT, VAL_SEED = 50, 7002
SOURCES = ("graph.py", "generators.py", "heuristics.py", "env.py", "neural.py", "_kernels.py", "dqn.py", "datasets.py")


def source_hash() -> str:
    h = hashlib.sha256()
    pkg = Path(colourlab.__file__).parent
    for name in SOURCES:
        h.update(name.encode())
        h.update((pkg / name).read_bytes())
    return h.hexdigest()[:16]


def datasets():
    train_graphs = [s.graph for s in generate_graphs(TRAIN_COUNT, N_RANGE, TRAIN_SEED)]
    val_graphs = [s.graph for s in generate_graphs(VAL_COUNT, N_RANGE, VAL_SEED)]
    return train_graphs, val_graphs


def config(seed: int, topology: str) -> TrainConfig:
    return TrainConfig(episodes=EPISODES, seed=seed, topology=topology, eval_period=100)


def run_key(cfg: TrainConfig) -> str:
    recipe = {"cfg": cfg.to_dict(), "train": [TRAIN_COUNT, list(N_RANGE), TRAIN_SEED],
              "val": [VAL_COUNT, list(N_RANGE), VAL_SEED], "src": source_hash()}
    return hashlib.sha256(json.dumps(recipe, sort_keys=True).encode()).hexdigest()[:20]


def get_run(seed: int, topology: str, graphs=None) -> dict:
    """Summary of one training run, trained now unless an exact cached copy exists."""
    cfg = config(seed, topology)
    path = CACHE / f"{topology}-seed{seed}-{run_key(cfg)}.json"
    if path.exists():
        return json.loads(path.read_text())
    train_graphs, val_graphs = graphs if graphs is not None else datasets()
    res = train(cfg, train_graphs, val_graphs)
    summary = {
        "seed": seed,
        "topology": topology,
        "config_hash": cfg.config_hash(),
        "paired_hash": cfg.config_hash(exclude=("topology",)),
        "final_val_mean": res.metrics[-1]["val_mean_colours"],
        "val_curve": [(r["episode"], r["val_mean_colours"]) for r in res.metrics if r["val_mean_colours"] is not None],
        "elapsed_s": res.metrics[-1]["elapsed_s"],
        "graph_sequence": res.graph_sequence,
        "first_vertices": res.first_vertices,
    }
    CACHE.mkdir(exist_ok=True)
    path.write_text(json.dumps(summary))
    return summary


if __name__ == "__main__":
    graphs = datasets()
    topologies = sys.argv[1:] or ["complete", "original"]
    for seed in SEEDS:
        for topo in topologies:
            s = get_run(seed, topo, graphs)
            print(topo, seed, s["final_val_mean"], s["elapsed_s"], flush=True)
