"""Graph colouring as an episodic MDP.

A state is a partial colouring. An action picks an uncoloured vertex, which
receives the lowest permissible colour; the reward is minus the number of
colours the transition introduced. Two selection rules keep the network out
of decisions that cannot affect the final colour count:

* first vertex: the episode starts with one uniformly random vertex coloured 0;
* isolated vertices: any uncoloured vertex whose neighbours are all coloured
  is coloured immediately, and its colour increase is charged to the action
  that triggered it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .graph import UNCOLOURED, Graph

TOPOLOGIES = ("complete", "original")


class ContractError(RuntimeError):
    """An operation was called on a state that violates its precondition."""


@dataclass(frozen=True)
class EnvState:
    graph: Graph
    colours: np.ndarray

    @property
    def colours_used(self) -> int:
        # greedy colourings always use a contiguous range 0..k-1
        return int(self.colours.max()) + 1 if self.graph.n else 0

    @property
    def uncoloured(self) -> np.ndarray:
        return np.flatnonzero(self.colours == UNCOLOURED)

    @property
    def terminal(self) -> bool:
        return not (self.colours == UNCOLOURED).any()


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _lowest_permissible(g: Graph, colours: np.ndarray, v: int) -> int:
    used = colours[list(g.neighbours[v])]
    used = used[used >= 0]
    if used.size == 0:
        return 0
    present = np.zeros(used.max() + 2, dtype=bool)
    present[used] = True
    return int(np.argmin(present))


def _freeze(colours: np.ndarray) -> np.ndarray:
    colours.flags.writeable = False
    return colours


def apply_isolated_rule(s: EnvState) -> tuple[EnvState, list[int]]:
    """Colour every uncoloured vertex that has no uncoloured neighbour.

    Colouring such a vertex never changes another vertex's status, so a
    single ascending sweep reaches the fixpoint; the loop re-checks anyway.
    """
    g = s.graph
    colours = s.colours.copy()
    auto: list[int] = []
    changed = True
    while changed:
        changed = False
        for v in np.flatnonzero(colours == UNCOLOURED):
            if all(colours[u] != UNCOLOURED for u in g.neighbours[v]):
                colours[v] = _lowest_permissible(g, colours, int(v))
                auto.append(int(v))
                changed = True
    if not auto:
        return s, auto
    return EnvState(g, _freeze(colours)), auto


def reset(g: Graph, seed) -> EnvState:
    """Start an episode: colour one uniformly random vertex 0, then sweep isolated vertices.

    Exactly one draw is taken from the generator.
    """
    if g.n < 1:
        raise ValueError("cannot colour an empty vertex set")
    rng = _rng(seed)
    first = int(rng.integers(g.n))
    colours = np.full(g.n, UNCOLOURED, dtype=np.int64)
    colours[first] = 0
    s, _ = apply_isolated_rule(EnvState(g, _freeze(colours)))
    return s


def legal_actions(s: EnvState) -> np.ndarray:
    if s.terminal:
        raise ContractError("terminal state has no legal actions")
    return s.uncoloured


def step(s: EnvState, a: int) -> tuple[EnvState, float, bool]:
    a = int(a)
    if not 0 <= a < s.graph.n or s.colours[a] != UNCOLOURED:
        raise ContractError(f"vertex {a} is not an uncoloured vertex")
    colours = s.colours.copy()
    colours[a] = _lowest_permissible(s.graph, colours, a)
    nxt, _ = apply_isolated_rule(EnvState(s.graph, _freeze(colours)))
    reward = -float(nxt.colours_used - s.colours_used)
    return nxt, reward, nxt.terminal


# -- state graph encoding -------------------------------------------------------


@dataclass(frozen=True)
class StateGraphEncoding:
    """Network input for one state.

    ``vertex_features[v] = (v / max(n-1, 1), (colour + 1) / n)``, so uncoloured
    vertices have colour feature 0. Pairs are unordered with ``pair_u < pair_v``;
    on the complete topology every pair is present and ``pair_features`` is -1
    for edges of the original graph and 0 otherwise. On the ``original``
    topology only edges are present (all -1).
    """

    n: int
    colours: np.ndarray
    vertex_features: np.ndarray
    pair_u: np.ndarray
    pair_v: np.ndarray
    pair_features: np.ndarray
    topology: str = "complete"

    @property
    def legal_mask(self) -> np.ndarray:
        return self.colours == UNCOLOURED


def pair_structure(g: Graph, topology: str = "complete"):
    """(pair_u, pair_v, pair_features) for a graph, cached on the graph."""
    if topology not in TOPOLOGIES:
        raise ValueError(f"topology must be one of {TOPOLOGIES}")
    key = f"_pairs_{topology}"
    cached = g.__dict__.get(key)
    if cached is not None:
        return cached
    if topology == "complete":
        u, v = np.triu_indices(g.n, k=1)
        feats = np.where(g.adjacency_matrix[u, v], -1.0, 0.0)
    else:
        e = np.array(g.sorted_edges, dtype=np.int64).reshape(-1, 2)
        u, v = e[:, 0], e[:, 1]
        feats = np.full(len(u), -1.0)
    out = tuple(np.ascontiguousarray(x) for x in (u.astype(np.int64), v.astype(np.int64), feats))
    for x in out:
        x.flags.writeable = False
    g.__dict__[key] = out
    return out


def encode_state(s: EnvState, topology: str = "complete") -> StateGraphEncoding:
    g = s.graph
    n = g.n
    u, v, feats = pair_structure(g, topology)
    vf = np.empty((n, 2))
    vf[:, 0] = np.arange(n) / max(n - 1, 1)
    vf[:, 1] = (s.colours + 1) / n
    return StateGraphEncoding(n, s.colours, vf, u, v, feats, topology)


# -- episodes -------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    state_enc: StateGraphEncoding
    action: int
    reward: float
    next_state_enc: StateGraphEncoding
    terminal: bool


class Rollout(NamedTuple):
    colours_used: int
    transitions: list
    colouring: np.ndarray
    colours_after_reset: int


Policy = Callable[[StateGraphEncoding, np.ndarray], int]


def rollout(g: Graph, policy: Policy, seed, topology: str = "complete") -> Rollout:
    """Play one episode; one Transition is recorded per policy decision."""
    rng = _rng(seed)
    s = reset(g, rng)
    start = s.colours_used
    transitions = []
    enc = encode_state(s, topology)
    while not s.terminal:
        a = int(policy(enc, s.uncoloured))
        s, r, done = step(s, a)
        nxt = encode_state(s, topology)
        transitions.append(Transition(enc, a, r, nxt, done))
        enc = nxt
    return Rollout(s.colours_used, transitions, s.colours, start)
