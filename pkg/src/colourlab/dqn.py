"""Deep Q-learning for the colouring MDP.

Randomness is split into independent streams derived from ``cfg.seed`` so
that runs differing only in the state encoding see the same sequence of
training graphs and first vertices:

* ``[seed, 0]`` chooses the training graph for each episode;
* ``[seed, 1, episode]`` drives that episode (one draw for the first vertex,
  then one uniform per decision for the epsilon test, plus one integer for
  each exploratory action);
* ``[seed, 2]`` samples replay minibatches.

Network weights are initialised from ``seed`` itself.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import neural
from .env import TOPOLOGIES, ContractError, Transition, encode_state, reset, step
from .heuristics import mean_stderr

log = logging.getLogger(__name__)

METRICS_HEADER = ("episode", "colours", "loss", "epsilon", "val_mean_colours", "elapsed_s")


class TrainingDiverged(RuntimeError):
    def __init__(self, msg, checkpoint=None):
        super().__init__(msg)
        self.checkpoint = checkpoint


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 25000
    lr: float = 1e-3
    batch_size: int = 64
    tau: float = 1e-3
    gamma: float = 1.0
    eps_start: float = 0.9
    eps_end: float = 0.01
    buffer_capacity: int = 50_000
    grad_steps_per_action: int = 1
    eval_period: int = 100
    seed: int = 0
    topology: str = "complete"
    manifest: str | None = None

    def __post_init__(self):
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        for name in ("lr", "batch_size", "tau", "eps_start", "eps_end", "buffer_capacity", "eval_period"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.grad_steps_per_action < 0:
            raise ValueError("grad_steps_per_action must be >= 0")
        if self.eps_end > self.eps_start:
            raise ValueError("eps_end must not exceed eps_start")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.tau > 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self, exclude=()) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in exclude}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def epsilon(episode: int, cfg: TrainConfig) -> float:
    """Geometric decay from eps_start at episode 0 to eps_end at cfg.episodes, flat afterwards."""
    if episode < 0:
        raise ValueError("episode must be >= 0")
    if cfg.episodes == 0 or episode >= cfg.episodes:
        return cfg.eps_end
    if episode == 0:
        return cfg.eps_start
    return cfg.eps_start * (cfg.eps_end / cfg.eps_start) ** (episode / cfg.episodes)


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions with uniform sampling without replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list = []
        self._head = 0  # index of the oldest item once full

    def __len__(self):
        return len(self._items)

    def push(self, item):
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._head] = item
            self._head = (self._head + 1) % self.capacity

    def items(self) -> list:
        """Contents from oldest to newest."""
        return self._items[self._head:] + self._items[:self._head]

    def sample(self, k: int, rng: np.random.Generator) -> list:
        if k > len(self._items):
            raise ValueError(f"cannot sample {k} from {len(self._items)} transitions")
        idx = rng.choice(len(self._items), size=k, replace=False)
        return [self._items[i] for i in idx]


def greedy_action(q: np.ndarray, legal: np.ndarray) -> int:
    legal = np.sort(np.asarray(legal))
    return int(legal[np.argmax(q[legal])])  # argmax takes the first, i.e. lowest index


def select_action(params, enc, legal, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over the legal vertices; greedy ties go to the lowest vertex index."""
    legal = np.asarray(legal)
    if legal.size == 0:
        raise ContractError("no legal actions")
    if rng.random() < eps:
        return int(legal[rng.integers(legal.size)])
    return greedy_action(neural.forward(params, enc), legal)


# -- evaluation -------------------------------------------------------------------


@dataclass
class EvalResult:
    colours: list[int]
    colourings: list[np.ndarray] = field(repr=False, default_factory=list)

    @property
    def mean(self) -> float:
        return mean_stderr(self.colours)[0]

    @property
    def stderr(self) -> float:
        return mean_stderr(self.colours)[1]


def evaluate(params, graphs, seed: int = 0, topology: str = "complete") -> EvalResult:
    """Greedy rollouts of every graph, batched in lockstep through the network.

    Graph i's first vertex comes from ``default_rng([seed, i])``, so results
    are a deterministic function of (params, graphs, seed).
    """
    graphs = list(graphs)
    if not graphs:
        return EvalResult([], [])
    states = [reset(g, np.random.default_rng([seed, i])) for i, g in enumerate(graphs)]
    while True:
        live = [i for i, s in enumerate(states) if not s.terminal]
        if not live:
            break
        qs = neural.forward_many(params, [encode_state(states[i], topology) for i in live])
        for i, q in zip(live, qs):
            a = greedy_action(q, states[i].uncoloured)
            states[i], _, _ = step(states[i], a)
    return EvalResult([s.colours_used for s in states], [s.colours for s in states])


def evaluate_multiseed(checkpoints, graphs, seed: int = 0, topology: str = "complete"):
    """Per-graph mean and standard error of colours across several trained networks.

    ``checkpoints`` may hold paths or QNetParams. Returns a list of
    (mean, stderr) tuples, one per graph, plus the raw (checkpoint x graph) matrix.
    """
    checkpoints = list(checkpoints)
    if not checkpoints:
        raise ValueError("need at least one checkpoint")
    rows = []
    for c in checkpoints:
        params = c if isinstance(c, neural.QNetParams) else neural.load_params(c)
        rows.append(evaluate(params, graphs, seed, topology).colours)
    raw = np.array(rows, dtype=np.int64).reshape(len(checkpoints), -1)
    return [mean_stderr(raw[:, j]) for j in range(raw.shape[1])], raw


# -- training -------------------------------------------------------------------


@dataclass
class TrainResult:
    params: neural.QNetParams
    metrics: list[dict]
    checkpoints: list[Path]
    config: TrainConfig
    graph_sequence: list[int]
    first_vertices: list[int]


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _metrics_writer(out_dir: Path):
    f = open(out_dir / "metrics.csv", "w", newline="")
    w = csv.writer(f, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    return f, w


def train(cfg: TrainConfig, train_graphs, val_graphs=(), out_dir=None, val_seed: int = 0,
          progress=None) -> TrainResult:
    """Run DQN training; see the module docstring for the RNG layout.

    Checkpoints and ``metrics.csv`` are written under ``out_dir`` when given.
    Everything except the ``elapsed_s`` column is a deterministic function of
    (cfg, train_graphs, val_graphs, val_seed).
    """
    train_graphs = list(train_graphs)
    val_graphs = list(val_graphs)
    if not train_graphs:
        raise ValueError("no training graphs")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "checkpoints").mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(json.dumps(
            {"config": cfg.to_dict(), "config_hash": cfg.config_hash(),
             "hash_without_topology": cfg.config_hash(exclude=("topology",))}, indent=2, sort_keys=True))

    params = neural.init_qnet(cfg.seed)
    target = params.copy()
    adam = neural.AdamState.zeros_like(params)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    graph_rng = np.random.default_rng([cfg.seed, 0])
    replay_rng = np.random.default_rng([cfg.seed, 2])

    metrics, checkpoints, graph_seq, firsts = [], [], [], []
    fh, writer = _metrics_writer(out) if out is not None else (None, None)
    t0 = time.perf_counter()

    def checkpoint(name, p):
        if out is None:
            return None
        path = out / "checkpoints" / name
        neural.save_params(p, path, extra={"config_hash": cfg.config_hash()})
        return path

    try:
        for ep in range(cfg.episodes):
            eps = epsilon(ep, cfg)
            gi = int(graph_rng.integers(len(train_graphs)))
            graph_seq.append(gi)
            g = train_graphs[gi]
            ep_rng = np.random.default_rng([cfg.seed, 1, ep])
            s = reset(g, ep_rng)
            firsts.append(int(np.flatnonzero(s.colours == 0)[0]) if g.n else -1)
            enc = encode_state(s, cfg.topology)
            losses = []
            while not s.terminal:
                a = select_action(params, enc, s.uncoloured, eps, ep_rng)
                s, r, done = step(s, a)
                nxt = encode_state(s, cfg.topology)
                buffer.push(Transition(enc, a, r, nxt, done))
                enc = nxt
                if len(buffer) < cfg.batch_size:
                    continue
                for _ in range(cfg.grad_steps_per_action):
                    batch = buffer.sample(cfg.batch_size, replay_rng)
                    loss, grads = neural.loss_and_grads(params, target, batch, cfg.gamma)
                    if not math.isfinite(loss) or not all(np.isfinite(x).all() for x in grads.values()):
                        path = checkpoint("last_good.npz", params)
                        raise TrainingDiverged(f"non-finite loss at episode {ep + 1}", path)
                    adam, params = neural.adam_step(adam, params, grads, cfg.lr)
                    target = neural.soft_update(target, params, cfg.tau)
                    losses.append(loss)
            params.episodes = ep + 1
            done_eps = ep + 1
            val = None
            if val_graphs and (done_eps % cfg.eval_period == 0 or done_eps == cfg.episodes):
                val = evaluate(params, val_graphs, val_seed, cfg.topology).mean
                path = checkpoint(f"ep{done_eps:06d}.npz", params)
                if path is not None:
                    checkpoints.append(path)
            row = {
                "episode": done_eps,
                "colours": s.colours_used,
                "loss": float(np.mean(losses)) if losses else None,
                "epsilon": eps,
                "val_mean_colours": val,
                "elapsed_s": round(time.perf_counter() - t0, 3),
            }
            metrics.append(row)
            if writer is not None:
                writer.writerow([_fmt(row[k]) for k in METRICS_HEADER])
                fh.flush()
            if progress is not None:
                progress(row)
    finally:
        if fh is not None:
            fh.close()
    final = checkpoint("final.npz", params)
    if final is not None:
        checkpoints.append(final)
    return TrainResult(params, metrics, checkpoints, cfg, graph_seq, firsts)
