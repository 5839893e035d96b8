"""Q-network: stacked edge/vertex GNN blocks plus a per-vertex MLP head.

Everything is plain numpy in float64 with hand-written backward passes.

Block semantics, for each unordered pair e = (u, v) with u < v and each vertex v::

    e' = MLP_e([e, h_u, h_v])
    a_v = [mean, max, min, std] of e' over pairs incident to v
    h'_v = MLP_v([h_v, a_v])

Each MLP is Linear -> ReLU -> Linear with hidden and output width ``EMB``.
The standard deviation is ``sqrt(var + STD_EPS) - sqrt(STD_EPS)``: exactly
zero for a single incident pair and differentiable everywhere. A vertex
with no incident pairs aggregates to the zero vector. The head maps every
vertex embedding to a Q value through 64 -> 64 -> 64 -> 1 with ReLUs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels

EMB = 64
N_BLOCKS = 5
VERTEX_IN = 2
PAIR_IN = 1
N_AGG = 4
STD_EPS = 1e-6
FORMAT = "colourlab-qnet"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def param_shapes(emb: int = EMB, n_blocks: int = N_BLOCKS) -> dict[str, tuple[int, ...]]:
    """Parameter names and shapes, in the fixed order used for serialisation."""
    shapes: dict[str, tuple[int, ...]] = {}
    for b in range(n_blocks):
        pin = PAIR_IN if b == 0 else emb
        vin = VERTEX_IN if b == 0 else emb
        shapes[f"block{b}.edge.w1"] = (pin + 2 * vin, emb)
        shapes[f"block{b}.edge.b1"] = (emb,)
        shapes[f"block{b}.edge.w2"] = (emb, emb)
        shapes[f"block{b}.edge.b2"] = (emb,)
        shapes[f"block{b}.vertex.w1"] = (vin + N_AGG * emb, emb)
        shapes[f"block{b}.vertex.b1"] = (emb,)
        shapes[f"block{b}.vertex.w2"] = (emb, emb)
        shapes[f"block{b}.vertex.b2"] = (emb,)
    shapes["head.w1"] = (emb, emb)
    shapes["head.b1"] = (emb,)
    shapes["head.w2"] = (emb, emb)
    shapes["head.b2"] = (emb,)
    shapes["head.w3"] = (emb, 1)
    shapes["head.b3"] = (1,)
    return shapes


@dataclass
class QNetParams:
    arrays: dict[str, np.ndarray]
    seed: int | None = None
    episodes: int = 0
    emb: int = EMB
    n_blocks: int = N_BLOCKS

    def __getitem__(self, name):
        return self.arrays[name]

    def copy(self) -> "QNetParams":
        return QNetParams({k: v.copy() for k, v in self.arrays.items()}, self.seed, self.episodes, self.emb, self.n_blocks)

    def names(self) -> list[str]:
        return list(param_shapes(self.emb, self.n_blocks))

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays.values())

    def max_abs_diff(self, other: "QNetParams") -> float:
        return max(float(np.abs(self.arrays[k] - other.arrays[k]).max()) for k in self.arrays)


def init_qnet(seed, emb: int = EMB, n_blocks: int = N_BLOCKS) -> QNetParams:
    """Uniform fan-in initialisation: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
    rng = np.random.default_rng(seed)
    shapes = param_shapes(emb, n_blocks)
    arrays = {}
    for name, shape in shapes.items():
        if name.rsplit(".", 1)[1].startswith("w"):
            fan_in = shape[0]
        else:
            fan_in = shapes[name[:-2] + "w" + name[-1]][0]
        bound = 1.0 / np.sqrt(fan_in)
        arrays[name] = rng.uniform(-bound, bound, size=shape)
    return QNetParams(arrays, seed=None if seed is None else int(seed), emb=emb, n_blocks=n_blocks)


# -- batching -----------------------------------------------------------------


class PackedBatch:
    """Several state encodings laid out as one disjoint graph."""

    def __init__(self, encs):
        self.encs = list(encs)
        ns = np.array([e.n for e in self.encs], dtype=np.int64)
        self.sizes = ns
        self.offsets = np.concatenate([[0], np.cumsum(ns)[:-1]]).astype(np.int64)
        V = int(ns.sum())
        self.V = V
        self.xv = np.concatenate([e.vertex_features for e in self.encs]) if V else np.zeros((0, VERTEX_IN))
        self.src = np.concatenate([e.pair_u + o for e, o in zip(self.encs, self.offsets)]).astype(np.int64)
        self.dst = np.concatenate([e.pair_v + o for e, o in zip(self.encs, self.offsets)]).astype(np.int64)
        self.xe = np.concatenate([e.pair_features for e in self.encs]).reshape(-1, PAIR_IN)
        P = len(self.src)
        self.P = P
        self.legal = np.concatenate([e.legal_mask for e in self.encs]) if V else np.zeros(0, dtype=bool)
        self.graph_of = np.repeat(np.arange(len(ns)), ns)

        ones = np.ones(P)
        cols = np.arange(P)
        # V x P one-hot matrices: scatter pair rows back onto their endpoints
        self.scatter_src = sp.csr_matrix((ones, (self.src, cols)), shape=(V, P))
        self.scatter_dst = sp.csr_matrix((ones, (self.dst, cols)), shape=(V, P))

        # padded incidence table: row v lists the count[v] pairs touching v
        inc_vertex = np.concatenate([self.src, self.dst])
        inc_pair = np.concatenate([cols, cols])
        counts = np.bincount(inc_vertex, minlength=V)
        self.count = counts
        K = int(counts.max()) if V and P else 0
        order = np.argsort(inc_vertex, kind="stable")
        first = np.cumsum(counts) - counts
        rank = np.arange(2 * P) - first[inc_vertex[order]]
        self.slot = np.zeros((V, max(K, 1)), dtype=np.int64)
        self.slot[inc_vertex[order], rank] = inc_pair[order]
        self.empty = counts == 0

    def vertex_index(self, graph: int, v: int) -> int:
        return int(self.offsets[graph] + v)


# -- layers -----------------------------------------------------------------


def _relu(x):
    return np.maximum(x, 0.0)


def _block_forward(params, b, pb: PackedBatch, hv, he):
    p = f"block{b}."
    W1 = params[p + "edge.w1"]
    pin = he.shape[1]
    vin = hv.shape[1]
    Wp, Wu, Wv = W1[:pin], W1[pin:pin + vin], W1[pin + vin:]
    act_e = _kernels.edge_hidden(he @ Wp, hv @ Wu, hv @ Wv, pb.src, pb.dst, params[p + "edge.b1"])
    e_new = act_e @ params[p + "edge.w2"]
    e_new += params[p + "edge.b2"]
    d = e_new.shape[1]
    xin = np.empty((pb.V, vin + N_AGG * d))
    xin[:, :vin] = hv
    root = _kernels.aggregate_forward(e_new, pb.slot, pb.count, STD_EPS, xin, vin)
    act_v = xin @ params[p + "vertex.w1"]
    act_v += params[p + "vertex.b1"]
    np.maximum(act_v, 0.0, out=act_v)
    v_new = act_v @ params[p + "vertex.w2"]
    v_new += params[p + "vertex.b2"]
    return v_new, e_new, (hv, he, act_e, e_new, root, xin, act_v)


def _block_backward(params, b, pb: PackedBatch, cache, dv_new, de_new, grads):
    p = f"block{b}."
    hv, he, act_e, e_new, root, xin, act_v = cache
    vin = hv.shape[1]
    grads[p + "vertex.w2"] = act_v.T @ dv_new
    grads[p + "vertex.b2"] = dv_new.sum(0)
    dpre_v = _kernels.relu_backward(dv_new @ params[p + "vertex.w2"].T, act_v)
    grads[p + "vertex.w1"] = xin.T @ dpre_v
    grads[p + "vertex.b1"] = dpre_v.sum(0)
    dxin = dpre_v @ params[p + "vertex.w1"].T
    dhv = np.ascontiguousarray(dxin[:, :vin])
    de = de_new if de_new is not None else np.zeros_like(e_new)
    _kernels.aggregate_backward(e_new, pb.slot, pb.count, xin, vin, root, dxin, de)

    grads[p + "edge.w2"] = act_e.T @ de
    grads[p + "edge.b2"] = de.sum(0)
    dpre_e = _kernels.relu_backward(de @ params[p + "edge.w2"].T, act_e)
    grads[p + "edge.b1"] = dpre_e.sum(0)
    W1 = params[p + "edge.w1"]
    pin = he.shape[1]
    Wp, Wu, Wv = W1[:pin], W1[pin:pin + vin], W1[pin + vin:]
    ds = pb.scatter_src @ dpre_e
    dd = pb.scatter_dst @ dpre_e
    grads[p + "edge.w1"] = np.concatenate([he.T @ dpre_e, hv.T @ ds, hv.T @ dd], axis=0)
    dhv += ds @ Wu.T + dd @ Wv.T
    # the first block's pair input is raw features: no gradient needed there
    dhe = dpre_e @ Wp.T if b > 0 else None
    return dhv, dhe


def forward_packed(params: QNetParams, pb: PackedBatch, keep_cache: bool = False):
    hv, he = pb.xv, pb.xe
    caches = []
    for b in range(params.n_blocks):
        hv, he, c = _block_forward(params, b, pb, hv, he)
        caches.append(c)
    z1 = hv @ params["head.w1"] + params["head.b1"]
    a1 = _relu(z1)
    z2 = a1 @ params["head.w2"] + params["head.b2"]
    a2 = _relu(z2)
    q = (a2 @ params["head.w3"] + params["head.b3"])[:, 0]
    if not keep_cache:
        return q, None
    return q, (caches, hv, z1, a1, z2, a2, he.shape)


def backward_packed(params: QNetParams, pb: PackedBatch, cache, dq: np.ndarray) -> dict[str, np.ndarray]:
    caches, h, z1, a1, z2, a2, he_shape = cache
    grads: dict[str, np.ndarray] = {}
    dq = dq[:, None]
    grads["head.w3"] = a2.T @ dq
    grads["head.b3"] = dq.sum(0)
    dz2 = (dq @ params["head.w3"].T) * (z2 > 0)
    grads["head.w2"] = a1.T @ dz2
    grads["head.b2"] = dz2.sum(0)
    dz1 = (dz2 @ params["head.w2"].T) * (z1 > 0)
    grads["head.w1"] = h.T @ dz1
    grads["head.b1"] = dz1.sum(0)
    dhv = dz1 @ params["head.w1"].T
    dhe = None
    for b in reversed(range(params.n_blocks)):
        dhv, dhe = _block_backward(params, b, pb, caches[b], dhv, dhe, grads)
    return {k: grads[k] for k in params.names()}


def forward(params: QNetParams, enc) -> np.ndarray:
    """Per-vertex Q values for one state encoding."""
    q, _ = forward_packed(params, PackedBatch([enc]))
    return q


def forward_many(params: QNetParams, encs) -> list[np.ndarray]:
    pb = PackedBatch(encs)
    q, _ = forward_packed(params, pb)
    return np.split(q, np.cumsum(pb.sizes)[:-1])


def gnn_block(params: QNetParams, block: int, vertex_embs, pair_embs, pair_u, pair_v):
    """Apply one block to a single graph's embeddings (mainly for inspection and tests)."""
    from types import SimpleNamespace

    n = vertex_embs.shape[0]
    enc = SimpleNamespace(
        n=n,
        vertex_features=np.asarray(vertex_embs, dtype=float),
        pair_u=np.asarray(pair_u, dtype=np.int64),
        pair_v=np.asarray(pair_v, dtype=np.int64),
        pair_features=np.asarray(pair_embs, dtype=float),
        legal_mask=np.ones(n, dtype=bool),
    )
    pb = PackedBatch([enc])
    pb.xe = enc.pair_features.reshape(len(enc.pair_u), -1)
    v_new, e_new, _ = _block_forward(params, block, pb, pb.xv, pb.xe)
    return v_new, e_new


def aggregate(pair_embs, pair_u, pair_v, n):
    """The PNA-style [mean, max, min, std] aggregation on its own."""
    from types import SimpleNamespace

    pair_embs = np.asarray(pair_embs, dtype=float)
    enc = SimpleNamespace(
        n=n, vertex_features=np.zeros((n, VERTEX_IN)),
        pair_u=np.asarray(pair_u, dtype=np.int64), pair_v=np.asarray(pair_v, dtype=np.int64),
        pair_features=np.zeros(len(pair_u)), legal_mask=np.ones(n, dtype=bool),
    )
    pb = PackedBatch([enc])
    out = np.empty((n, N_AGG * pair_embs.shape[1]))
    _kernels.aggregate_forward(np.ascontiguousarray(pair_embs), pb.slot, pb.count, STD_EPS, out, 0)
    return out


# -- DQN loss -------------------------------------------------------------------


def td_targets(target_params: QNetParams, batch, gamma: float) -> np.ndarray:
    """r + gamma * max over legal a' of Q_target(s', a'); just r for terminal transitions."""
    y = np.array([t.reward for t in batch], dtype=float)
    live = [i for i, t in enumerate(batch) if not t.terminal]
    if live:
        pb = PackedBatch([batch[i].next_state_enc for i in live])
        q, _ = forward_packed(target_params, pb)
        masked = np.where(pb.legal, q, -np.inf)
        best = np.maximum.reduceat(masked, pb.offsets)
        y[live] += gamma * best
    return y


def loss_and_grads(params: QNetParams, target_params: QNetParams, batch, gamma: float = 1.0):
    """Mean squared TD error over the batch and its exact gradient w.r.t. ``params``."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    y = td_targets(target_params, batch, gamma)
    pb = PackedBatch([t.state_enc for t in batch])
    q, cache = forward_packed(params, pb, keep_cache=True)
    idx = pb.offsets + np.array([t.action for t in batch], dtype=np.int64)
    td = y - q[idx]
    loss = float(np.mean(td ** 2))
    dq = np.zeros(pb.V)
    np.add.at(dq, idx, -2.0 * td / len(batch))
    return loss, backward_packed(params, pb, cache, dq)


# -- optimisation -------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: QNetParams, **kw) -> "AdamState":
        return cls({k: np.zeros_like(a) for k, a in params.arrays.items()},
                   {k: np.zeros_like(a) for k, a in params.arrays.items()}, 0, **kw)


def adam_step(state: AdamState, params: QNetParams, grads, lr: float) -> tuple[AdamState, QNetParams]:
    for k, g in grads.items():
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for {k}")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    m, v, new = {}, {}, {}
    for k, a in params.arrays.items():
        g = grads[k]
        m[k] = b1 * state.m[k] + (1 - b1) * g
        v[k] = b2 * state.v[k] + (1 - b2) * g * g
        mhat = m[k] / (1 - b1 ** t)
        vhat = v[k] / (1 - b2 ** t)
        new[k] = a - lr * mhat / (np.sqrt(vhat) + state.eps)
    out = QNetParams(new, params.seed, params.episodes, params.emb, params.n_blocks)
    return AdamState(m, v, t, b1, b2, state.eps), out


def soft_update(target: QNetParams, online: QNetParams, tau: float) -> QNetParams:
    """target <- tau * online + (1 - tau) * target."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    arrays = {k: tau * online.arrays[k] + (1.0 - tau) * target.arrays[k] for k in target.arrays}
    return QNetParams(arrays, target.seed, target.episodes, target.emb, target.n_blocks)


# -- checkpoints -------------------------------------------------------------------


def save_params(params: QNetParams, path, extra: dict | None = None) -> None:
    """Write an ``.npz`` checkpoint: a JSON header plus one float64 array per parameter."""
    meta = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "emb": params.emb,
        "n_blocks": params.n_blocks,
        "vertex_in": VERTEX_IN,
        "pair_in": PAIR_IN,
        "aggregators": ["mean", "max", "min", "std"],
        "seed": params.seed,
        "episodes": params.episodes,
        "order": params.names(),
    }
    if extra:
        meta["extra"] = extra
    arrays = {k: np.asarray(params.arrays[k], dtype=np.float64) for k in params.names()}
    with open(path, "wb") as f:
        np.savez(f, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_params(path, emb: int = EMB, n_blocks: int = N_BLOCKS) -> QNetParams:
    with np.load(path, allow_pickle=False) as z:
        if "__meta__" not in z.files:
            raise CheckpointError(f"{path}: missing metadata header")
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format") != FORMAT or meta.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format {meta.get('format')!r} v{meta.get('version')}")
        if meta["emb"] != emb or meta["n_blocks"] != n_blocks:
            raise CheckpointError(
                f"{path}: architecture mismatch (file emb={meta['emb']}, blocks={meta['n_blocks']}; "
                f"expected emb={emb}, blocks={n_blocks})")
        shapes = param_shapes(emb, n_blocks)
        arrays = {}
        for name, shape in shapes.items():
            if name not in z.files:
                raise CheckpointError(f"{path}: missing parameter {name}")
            a = z[name]
            if a.shape != shape:
                raise CheckpointError(f"{path}: {name} has shape {a.shape}, expected {shape}")
            arrays[name] = a.astype(np.float64)
    return QNetParams(arrays, meta.get("seed"), int(meta.get("episodes", 0)), emb, n_blocks)


def checkpoint_meta(path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        return json.loads(str(z["__meta__"]))
