"""Greedy construction heuristics and an exact chromatic-number solver.

Tie-breaking rules (benchmark results are sensitive to them):

* Largest-First: degree descending, then vertex index ascending.
* Smallest-Last: repeatedly remove the minimum-degree vertex of the remaining
  graph and place it last; on ties the highest index is removed, so tied
  vertices appear in ascending index order.
* DSATUR: maximum saturation, then maximum degree in the original graph,
  then lowest index (the rule networkx uses; it reproduces the published
  DSATUR values on the queen benchmarks exactly).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .graph import UNCOLOURED, Graph, count_colours

BASELINES = ("random", "lf", "sl", "dsatur")


def lowest_permissible(g: Graph, colours, v: int) -> int:
    used = {colours[u] for u in g.neighbours[v]}
    c = 0
    while c in used:
        c += 1
    return c


def check_order(g: Graph, order) -> list[int]:
    order = [int(v) for v in order]
    if sorted(order) != list(range(g.n)):
        raise ValueError("order must be a permutation of the graph's vertices")
    return order


def greedy_colour(g: Graph, order) -> np.ndarray:
    """Colour vertices in ``order``, each with the lowest colour its coloured neighbours lack."""
    order = check_order(g, order)
    colours = np.full(g.n, UNCOLOURED, dtype=np.int64)
    for v in order:
        colours[v] = lowest_permissible(g, colours, v)
    return colours


def order_random(g: Graph, seed) -> list[int]:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.permutation(g.n).tolist()


def order_largest_first(g: Graph) -> list[int]:
    deg = g.degrees
    return sorted(range(g.n), key=lambda v: (-deg[v], v))


def order_smallest_last(g: Graph) -> list[int]:
    deg = g.degrees.copy()
    removed = np.zeros(g.n, dtype=bool)
    tail = []
    for _ in range(g.n):
        masked = np.where(removed, np.iinfo(np.int64).max, deg)
        # on ties the highest index goes last, so tied vertices end up in ascending order
        v = g.n - 1 - int(np.argmin(masked[::-1]))
        removed[v] = True
        tail.append(v)
        for u in g.neighbours[v]:
            deg[u] -= 1
    return tail[::-1]


def dsatur(g: Graph) -> np.ndarray:
    n = g.n
    colours = np.full(n, UNCOLOURED, dtype=np.int64)
    neigh_colours = [set() for _ in range(n)]
    deg = g.degrees
    uncoloured = set(range(n))
    while uncoloured:
        v = min(uncoloured, key=lambda x: (-len(neigh_colours[x]), -deg[x], x))
        c = 0
        while c in neigh_colours[v]:
            c += 1
        colours[v] = c
        uncoloured.discard(v)
        for u in g.neighbours[v]:
            neigh_colours[u].add(c)
    return colours


def run_baseline(name: str, g: Graph, seed=None) -> np.ndarray:
    if name == "random":
        return greedy_colour(g, order_random(g, seed))
    if name == "lf":
        return greedy_colour(g, order_largest_first(g))
    if name == "sl":
        return greedy_colour(g, order_smallest_last(g))
    if name == "dsatur":
        return dsatur(g)
    raise ValueError(f"unknown heuristic {name!r}; choose from {BASELINES}")


def mean_stderr(values) -> tuple[float, float]:
    """Sample mean and standard error (Bessel-corrected); stderr is 0 for one value."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("no values")
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


# -- exact solver -------------------------------------------------------------


@dataclass
class ExactResult:
    chromatic_number: int
    witness: np.ndarray
    node_budget_hit: bool
    lower_bound: int
    nodes: int
    seconds: float

    @property
    def proven(self) -> bool:
        return not self.node_budget_hit


def greedy_clique(g: Graph) -> list[int]:
    """A maximal clique grown greedily from each vertex; the largest is returned."""
    best: list[int] = []
    deg = g.degrees
    for s in range(g.n):
        clique = [s]
        cand = set(g.adjacency[s])
        while cand:
            v = max(cand, key=lambda x: (len(cand & g.adjacency[x]), deg[x], -x))
            clique.append(v)
            cand &= g.adjacency[v]
        if len(clique) > len(best):
            best = clique
    return best


class _BudgetExceeded(Exception):
    pass


def exact_chromatic(g: Graph, node_budget: int = 2_000_000) -> ExactResult:
    """Chromatic number by DSATUR-ordered branch and bound.

    Colours are introduced in order (a new colour is always the next unused
    one), which removes colour-permutation symmetry; the largest greedy clique
    is pre-coloured 0..q-1 and gives the lower bound, DSATUR gives the first
    upper bound. When ``node_budget`` search nodes are exhausted the best
    bounds found so far are returned with ``node_budget_hit`` set.
    """
    t0 = time.perf_counter()
    n = g.n
    if n == 0:
        return ExactResult(0, np.zeros(0, dtype=np.int64), False, 0, 0, 0.0)
    best = dsatur(g)
    best_k = count_colours(best)
    clique = greedy_clique(g)
    lb = len(clique)
    if best_k == lb:
        return ExactResult(best_k, best, False, lb, 0, time.perf_counter() - t0)

    adj = g.neighbours
    colours = np.full(n, UNCOLOURED, dtype=np.int64)
    # count of neighbours of v carrying colour c; saturation = nonzero entries
    nb_count = np.zeros((n, n + 1), dtype=np.int64)
    sat = np.zeros(n, dtype=np.int64)
    udeg = g.degrees.copy()
    uncol = set(range(n))
    state = {"best": best, "best_k": best_k, "nodes": 0}

    def assign(v, c):
        colours[v] = c
        uncol.discard(v)
        for u in adj[v]:
            if nb_count[u, c] == 0:
                sat[u] += 1
            nb_count[u, c] += 1
            udeg[u] -= 1

    def unassign(v, c):
        colours[v] = UNCOLOURED
        uncol.add(v)
        for u in adj[v]:
            nb_count[u, c] -= 1
            if nb_count[u, c] == 0:
                sat[u] -= 1
            udeg[u] += 1

    def search(k_used):
        state["nodes"] += 1
        if state["nodes"] > node_budget:
            raise _BudgetExceeded
        if not uncol:
            state["best"] = colours.copy()
            state["best_k"] = k_used
            return
        v = max(uncol, key=lambda x: (sat[x], udeg[x], -x))
        # any completion needs at least k_used colours; prune at best_k
        limit = min(k_used + 1, state["best_k"] - 1)
        for c in range(limit):
            if nb_count[v, c]:
                continue
            assign(v, c)
            search(max(k_used, c + 1))
            unassign(v, c)
            if state["best_k"] <= max(lb, k_used):
                return

    for i, v in enumerate(clique):
        assign(v, i)
    hit = False
    try:
        search(lb)
    except _BudgetExceeded:
        hit = True
    k = state["best_k"]
    return ExactResult(k, state["best"], hit, lb if hit else k, state["nodes"], time.perf_counter() - t0)
