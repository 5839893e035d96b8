"""Graph data model, colouring checks and DIMACS .col I/O."""

from __future__ import annotations

import logging
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

UNCOLOURED = -1


class Graph:
    """Immutable simple undirected graph on vertices 0..n-1.

    Edges are stored as sorted ``(u, v)`` tuples with ``u < v``.
    """

    __slots__ = ("n", "edges", "adjacency", "__dict__")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise ValueError(f"vertex count must be non-negative, got {n}")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            canon.add((u, v) if u < v else (v, u))
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in canon:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", frozenset(canon))
        object.__setattr__(self, "adjacency", tuple(frozenset(a) for a in adj))

    def __setattr__(self, name, value):
        if name in ("n", "edges", "adjacency"):
            raise AttributeError("Graph is immutable")
        object.__setattr__(self, name, value)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph(n={self.n}, m={len(self.edges)})"

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @cached_property
    def neighbours(self) -> tuple[tuple[int, ...], ...]:
        """Adjacency as sorted tuples, for deterministic iteration."""
        return tuple(tuple(sorted(a)) for a in self.adjacency)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @cached_property
    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        if self.edges:
            e = np.array(self.sorted_edges)
            a[e[:, 0], e[:, 1]] = True
            a[e[:, 1], e[:, 0]] = True
        a.flags.writeable = False
        return a

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def subgraph(self, vertices: Sequence[int]) -> "Graph":
        """Induced subgraph, vertices relabelled in the given order."""
        index = {v: i for i, v in enumerate(vertices)}
        es = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        return Graph(len(index), es)


def complete_graph(n: int) -> Graph:
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def empty_graph(n: int) -> Graph:
    return Graph(n)


def cycle_graph(n: int) -> Graph:
    return Graph(n, ((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    return Graph(n, ((i, i + 1) for i in range(n - 1)))


def star_graph(leaves: int) -> Graph:
    """K_{1,leaves} with centre 0."""
    return Graph(leaves + 1, ((0, i) for i in range(1, leaves + 1)))


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, outer + spokes + inner)


# -- colourings ------------------------------------------------------------


def _check_length(g: Graph, colours) -> np.ndarray:
    c = np.asarray(colours, dtype=np.int64)
    if c.shape != (g.n,):
        raise ValueError(f"colouring has length {c.shape}, graph has {g.n} vertices")
    return c


def is_valid_colouring(g: Graph, colours) -> bool:
    """True if no edge joins two vertices of the same colour.

    Uncoloured (-1) entries are ignored, so partial colourings can be checked.
    """
    c = _check_length(g, colours)
    if (c < UNCOLOURED).any():
        return False
    for u, v in g.edges:
        if c[u] != UNCOLOURED and c[u] == c[v]:
            return False
    return True


def is_complete_colouring(colours) -> bool:
    return bool((np.asarray(colours) >= 0).all())


def count_colours(colours) -> int:
    c = np.asarray(colours)
    return int(np.unique(c[c >= 0]).size)


# -- DIMACS ----------------------------------------------------------------


class DimacsParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def parse_dimacs(text: str | bytes) -> Graph:
    """Parse a DIMACS ``.col`` graph.

    Duplicate and reversed ``e`` lines collapse to a single edge; a declared
    edge count that disagrees with the file is logged, not rejected.
    """
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    n = None
    declared_m = None
    edges: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] == "c":
            continue
        tok = line.split()
        if tok[0] == "p":
            if n is not None:
                raise DimacsParseError(lineno, "duplicate 'p' line")
            if len(tok) != 4 or tok[1] not in ("edge", "col"):
                raise DimacsParseError(lineno, f"malformed problem line {line!r}")
            try:
                n, declared_m = int(tok[2]), int(tok[3])
            except ValueError:
                raise DimacsParseError(lineno, f"non-integer counts in {line!r}") from None
            if n < 0 or declared_m < 0:
                raise DimacsParseError(lineno, "negative counts")
        elif tok[0] == "e":
            if n is None:
                raise DimacsParseError(lineno, "edge line before 'p' line")
            if len(tok) != 3:
                raise DimacsParseError(lineno, f"malformed edge line {line!r}")
            try:
                u, v = int(tok[1]), int(tok[2])
            except ValueError:
                raise DimacsParseError(lineno, f"non-integer endpoint in {line!r}") from None
            if not (1 <= u <= n and 1 <= v <= n):
                raise DimacsParseError(lineno, f"endpoint out of range [1, {n}]")
            if u == v:
                raise DimacsParseError(lineno, f"self-loop on vertex {u}")
            edges.add((u - 1, v - 1) if u < v else (v - 1, u - 1))
        else:
            raise DimacsParseError(lineno, f"unknown line type {tok[0]!r}")
    if n is None:
        raise DimacsParseError(0, "missing 'p edge' line")
    if declared_m != len(edges):
        log.warning("DIMACS header declares %d edges, found %d distinct", declared_m, len(edges))
    return Graph(n, edges)


def write_dimacs(g: Graph, comment: str | None = None) -> bytes:
    lines = []
    if comment:
        lines.extend(f"c {c}" for c in comment.splitlines())
    lines.append(f"p edge {g.n} {g.m}")
    lines.extend(f"e {u + 1} {v + 1}" for u, v in g.sorted_edges)
    return ("\n".join(lines) + "\n").encode("ascii")


def read_dimacs(path) -> Graph:
    with open(path, "rb") as f:
        return parse_dimacs(f.read())


def save_dimacs(g: Graph, path, comment: str | None = None) -> None:
    with open(path, "wb") as f:
        f.write(write_dimacs(g, comment))
