import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from colourlab.graph import Graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=1, max_n=12):
    """Arbitrary simple graphs: n vertices, each pair an edge with a drawn density."""
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, [p for p, keep in zip(pairs, mask) if keep])


def set_partitions(n):
    """All partitions of range(n) as restricted growth strings (a[0] = 0, a[i] <= max(a[:i]) + 1)."""
    a = [0] * n

    def rec(i, top):
        if i == n:
            yield list(a)
            return
        for c in range(top + 2):
            a[i] = c
            yield from rec(i + 1, max(top, c))

    if n == 0:
        yield []
    else:
        yield from rec(1, 0)


def brute_force_chi(g: Graph) -> int:
    """Fewest blocks over every partition of the vertices into independent sets.

    Plain enumeration of all colourings up to renaming of colours, sharing no
    code with the branch-and-bound solver.
    """
    if g.n == 0:
        return 0
    edges = np.array(sorted(g.edges), dtype=int).reshape(-1, 2)
    best = g.n
    for a in set_partitions(g.n):
        k = max(a) + 1
        if k < best:
            a = np.array(a)
            if (a[edges[:, 0]] != a[edges[:, 1]]).all():
                best = k
    return best


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {title}" + (f" ({detail})" if detail else ""))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
