"""Random and structured graph generators.

Every random generator takes an explicit ``seed`` and draws from numpy's
PCG64 bit generator (``numpy.random.default_rng``), so a (params, seed) pair
always yields the same graph on every platform.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .graph import Graph

FAMILIES = (
    "erdos_renyi",
    "watts_strogatz",
    "barabasi_albert",
    "queen",
    "gaussian_partition",
    "known_chromatic",
    "leighton_like",
)


class PlantedGraph(NamedTuple):
    """A generated graph together with a planted colouring.

    ``k`` is the number of colours of ``colouring``; for ``gen_known_chromatic``
    it is an upper bound on the chromatic number, for ``gen_leighton_like``
    it is the exact chromatic number.
    """

    graph: Graph
    k: int
    colouring: np.ndarray


def rng_for(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def gen_erdos_renyi(n: int, p: float, seed) -> Graph:
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_prob("p", p)
    rng = rng_for(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def gen_watts_strogatz(n: int, k: int, beta: float, seed) -> Graph:
    """Ring lattice with ``k`` nearest neighbours, each edge rewired w.p. ``beta``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if k % 2 or not 0 <= k < n:
        raise ValueError(f"k must be even and in [0, n), got k={k}, n={n}")
    _check_prob("beta", beta)
    rng = rng_for(seed)
    adj = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in adj[u] or rng.random() >= beta:
                continue
            if len(adj[u]) >= n - 1:
                continue
            while True:
                w = int(rng.integers(n))
                if w != u and w not in adj[u]:
                    break
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    return Graph(n, ((u, v) for u in range(n) for v in adj[u] if u < v))


def gen_barabasi_albert(n: int, m_attach: int, seed) -> Graph:
    """Preferential attachment grown from a clique on ``m_attach + 1`` vertices.

    Edge count is ``C(m_attach + 1, 2) + m_attach * (n - m_attach - 1)``.
    """
    if not 1 <= m_attach < n:
        raise ValueError(f"need 1 <= m_attach < n, got m_attach={m_attach}, n={n}")
    rng = rng_for(seed)
    m0 = m_attach + 1
    edges = [(u, v) for u in range(m0) for v in range(u + 1, m0)]
    # one entry per edge endpoint: sampling from it is sampling by degree
    ends = [x for e in edges for x in e]
    for v in range(m0, n):
        targets: set[int] = set()
        while len(targets) < m_attach:
            targets.add(ends[int(rng.integers(len(ends)))])
        for t in sorted(targets):
            edges.append((t, v))
            ends.extend((t, v))
    return Graph(n, edges)


def gen_queen(rows: int, cols: int) -> Graph:
    """Queen graph: squares (r, c) -> vertex r*cols + c, adjacent if a queen move apart."""
    if rows < 1 or cols < 1:
        raise ValueError("board dimensions must be >= 1")
    edges = []
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    for i, (r1, c1) in enumerate(cells):
        for j in range(i + 1, len(cells)):
            r2, c2 = cells[j]
            if r1 == r2 or c1 == c2 or abs(r1 - r2) == abs(c1 - c2):
                edges.append((i, j))
    return Graph(rows * cols, edges)


def gen_gaussian_partition(n: int, mean_size: float, shape: float, p_in: float, p_out: float, seed) -> Graph:
    """Gaussian random partition graph.

    Cluster sizes are drawn from a normal distribution with mean ``mean_size``
    and standard deviation ``mean_size / shape`` (rounded, at least 1) until they
    cover n vertices (the last cluster is truncated); pairs inside a cluster
    are joined w.p. ``p_in``, pairs across clusters w.p. ``p_out``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if mean_size <= 0 or shape <= 0:
        raise ValueError("mean_size and shape must be positive")
    _check_prob("p_in", p_in)
    _check_prob("p_out", p_out)
    rng = rng_for(seed)
    label = np.empty(n, dtype=np.int64)
    start, cluster = 0, 0
    while start < n:
        size = max(1, int(round(rng.normal(mean_size, mean_size / shape))))
        label[start:start + size] = cluster
        start += size
        cluster += 1
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(label[iu] == label[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    return Graph(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def _random_groups(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Assign vertices to k nonempty groups of near-equal size."""
    perm = rng.permutation(n)
    groups = np.empty(n, dtype=np.int64)
    groups[perm] = np.arange(n) % k
    return groups


def gen_known_chromatic(n: int, k: int, p: float, seed) -> PlantedGraph:
    """Random k-partite graph: chromatic number at most k by construction."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    _check_prob("p", p)
    rng = rng_for(seed)
    groups = _random_groups(n, k, rng)
    iu, ju = np.triu_indices(n, k=1)
    keep = (groups[iu] != groups[ju]) & (rng.random(iu.size) < p)
    g = Graph(n, zip(iu[keep].tolist(), ju[keep].tolist()))
    return PlantedGraph(g, k, groups)


def gen_leighton_like(n: int, k: int, seed, p: float = 0.5) -> PlantedGraph:
    """k-partite random graph with a planted k-clique, so chromatic number is exactly k.

    A simplified stand-in for Leighton's construction that keeps its useful
    property (known chromatic number), not its exact edge distribution.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    _check_prob("p", p)
    rng = rng_for(seed)
    groups = _random_groups(n, k, rng)
    iu, ju = np.triu_indices(n, k=1)
    keep = (groups[iu] != groups[ju]) & (rng.random(iu.size) < p)
    edges = set(zip(iu[keep].tolist(), ju[keep].tolist()))
    clique = [int(rng.choice(np.flatnonzero(groups == c))) for c in range(k)]
    for i, u in enumerate(clique):
        for v in clique[i + 1:]:
            edges.add((min(u, v), max(u, v)))
    return PlantedGraph(Graph(n, edges), k, groups)


class SpinradLayout(NamedTuple):
    A: list[int]
    B: list[int]
    C: list[int]
    Bp: list[int]
    Cp: list[int]

    def three_colouring(self, n: int) -> np.ndarray:
        """The witness partition A+B'+C', B, C as colours 0, 1, 2."""
        c = np.zeros(n, dtype=np.int64)
        c[self.B] = 1
        c[self.C] = 2
        return c


def spinrad_layout(m: int) -> SpinradLayout:
    """Vertex ids of the five Spinrad sets, numbered A, B, C, B', C' in order.

    ``A[i-1]`` is a_i, ``B[j-1]`` is b_j and ``C[j-2]`` is c_j (C starts at c_2).
    """
    if m < 4:
        raise ValueError(f"Spinrad graphs need m >= 4, got {m}")
    sizes = [m - 2, m - 1, m - 1, 2 * m, 2 * m]
    bounds = np.cumsum([0] + sizes)
    sets = [list(range(bounds[i], bounds[i + 1])) for i in range(5)]
    return SpinradLayout(*sets)


def gen_spinrad(m: int) -> Graph:
    """Spinrad's DSATUR-adversarial graph on n = 7m - 4 vertices (chromatic number 3)."""
    lay = spinrad_layout(m)
    n = 7 * m - 4
    a = lambda i: lay.A[i - 1]  # noqa: E731
    b = lambda j: lay.B[j - 1]  # noqa: E731
    c = lambda j: lay.C[j - 2]  # noqa: E731
    edges = set()
    for i in range(1, m - 1):
        for j in range(1, m):
            if i != j:
                edges.add((a(i), b(j)))
        for j in range(2, m + 1):
            if i < j:
                edges.add((a(i), c(j)))
    for i in range(3, m):
        edges.add((b(i - 1), c(i)))
    deg = np.zeros(n, dtype=np.int64)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    # pad each b (resp. c) up to degree 2m using the lowest-index B' (C') vertices
    for core, pad in ((lay.B, lay.Bp), (lay.C, lay.Cp)):
        for x in core:
            need = 2 * m - deg[x]
            for y in pad[:need]:
                edges.add((x, y))
    return Graph(n, edges)


def gen_mycielski(k: int) -> Graph:
    """Iterated Mycielskian of K2 with k - 1 steps (DIMACS ``myciel<k>``).

    Each step keeps vertices 0..n-1, adds shadow n+i adjacent to N(i), then an
    apex adjacent to all shadows. myciel3 has 11 vertices, myciel5 has 47.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n, edges = 2, [(0, 1)]
    for _ in range(k - 1):
        new = list(edges)
        for u, v in edges:
            new.append((u, n + v))
            new.append((v, n + u))
        new.extend((n + i, 2 * n) for i in range(n))
        n, edges = 2 * n + 1, new
    return Graph(n, edges)
