"""Mixed-family graph datasets, JSON-lines manifests and bundled benchmark instances.

Default parameter ranges used when a family is sampled for a graph on n
vertices (all draws uniform):

=====================  =====================================================
erdos_renyi            p in [0.1, 0.9]
watts_strogatz         k even in [2, sqrt(n)], beta in [0.1, 0.3]
barabasi_albert        m_attach integer in [2, sqrt(n)]
queen                  rows x cols = n, rows <= cols, rows >= 2 (n resampled
                       when it has no such factorisation)
gaussian_partition     mean_size in [2, sqrt(n)], shape in [sqrt(n), n/2],
                       p_in in [0.5, 1], p_out in [0, p_in/2]
known_chromatic        k integer in [2, sqrt(n)], p in [0.1, 0.9]
leighton_like          k integer in [2, sqrt(n)], p in [0.1, 0.9]
=====================  =====================================================

Graph i of a dataset built with seed s is drawn entirely from
``numpy.random.default_rng([s, i])``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import generators as gen
from .graph import Graph, read_dimacs, save_dimacs

FAMILY_RANGES = {
    "erdos_renyi": "p~U[0.1,0.9]",
    "watts_strogatz": "k even in [2,sqrt(n)], beta~U[0.1,0.3]",
    "barabasi_albert": "m_attach in [2,sqrt(n)]",
    "queen": "rows*cols=n, 2<=rows<=cols",
    "gaussian_partition": "mean_size~U[2,sqrt(n)], shape~U[sqrt(n),n/2], p_in~U[0.5,1], p_out~U[0,p_in/2]",
    "known_chromatic": "k in [2,sqrt(n)], p~U[0.1,0.9]",
    "leighton_like": "k in [2,sqrt(n)], p~U[0.1,0.9]",
}


@dataclass
class Sampled:
    graph: Graph
    family: str
    params: dict
    chi_upper: int | None = None
    chi: int | None = None


def _queen_shapes(n):
    return [(r, n // r) for r in range(2, math.isqrt(n) + 1) if n % r == 0]


def _int_upto_sqrt(rng, n, lo=2):
    hi = max(lo, math.isqrt(n))
    return int(rng.integers(lo, hi + 1))


def sample_family_graph(family: str, n: int, rng: np.random.Generator) -> Sampled:
    """One graph of the given family on n vertices, parameters drawn from the default ranges."""
    if family == "erdos_renyi":
        p = float(rng.uniform(0.1, 0.9))
        return Sampled(gen.gen_erdos_renyi(n, p, rng), family, {"n": n, "p": p})
    if family == "watts_strogatz":
        k = 2 * int(rng.integers(1, max(1, math.isqrt(n) // 2) + 1))
        k = min(k, n - 1 - (n - 1) % 2)
        beta = float(rng.uniform(0.1, 0.3))
        return Sampled(gen.gen_watts_strogatz(n, k, beta, rng), family, {"n": n, "k": k, "beta": beta})
    if family == "barabasi_albert":
        m = min(_int_upto_sqrt(rng, n), n - 1)
        return Sampled(gen.gen_barabasi_albert(n, m, rng), family, {"n": n, "m_attach": m})
    if family == "queen":
        shapes = _queen_shapes(n)
        r, c = shapes[int(rng.integers(len(shapes)))] if shapes else (1, n)
        return Sampled(gen.gen_queen(r, c), family, {"rows": r, "cols": c})
    if family == "gaussian_partition":
        s = float(rng.uniform(2, max(2.0, math.sqrt(n))))
        lo = math.sqrt(n)
        v = float(rng.uniform(lo, max(lo, n / 2)))
        p_in = float(rng.uniform(0.5, 1.0))
        p_out = float(rng.uniform(0.0, p_in / 2))
        g = gen.gen_gaussian_partition(n, s, v, p_in, p_out, rng)
        return Sampled(g, family, {"n": n, "mean_size": s, "shape": v, "p_in": p_in, "p_out": p_out})
    if family == "known_chromatic":
        k = min(_int_upto_sqrt(rng, n), n)
        p = float(rng.uniform(0.1, 0.9))
        pg = gen.gen_known_chromatic(n, k, p, rng)
        return Sampled(pg.graph, family, {"n": n, "k": k, "p": p}, chi_upper=k)
    if family == "leighton_like":
        k = min(_int_upto_sqrt(rng, n), n)
        p = float(rng.uniform(0.1, 0.9))
        pg = gen.gen_leighton_like(n, k, rng, p=p)
        return Sampled(pg.graph, family, {"n": n, "k": k, "p": p}, chi_upper=k, chi=k)
    raise ValueError(f"unknown family {family!r}; choose from {gen.FAMILIES}")


def sample_graph(n_range, rng: np.random.Generator, families=gen.FAMILIES) -> Sampled:
    """Family and size uniformly at random, then the family's own parameters."""
    lo, hi = n_range
    if not 1 <= lo <= hi:
        raise ValueError(f"invalid size range {n_range}")
    family = families[int(rng.integers(len(families)))]
    n = int(rng.integers(lo, hi + 1))
    if family == "queen":
        # keep the size uniform over the sizes a board can have
        sizes = [k for k in range(lo, hi + 1) if _queen_shapes(k)]
        if sizes:
            n = sizes[int(rng.integers(len(sizes)))]
    return sample_family_graph(family, n, rng)


def generate_graphs(count: int, n_range, seed: int, families=gen.FAMILIES) -> list[Sampled]:
    if count < 0:
        raise ValueError("count must be >= 0")
    return [sample_graph(n_range, np.random.default_rng([seed, i]), families) for i in range(count)]


# -- manifests --------------------------------------------------------------------


@dataclass
class ManifestEntry:
    path: str
    family: str
    params: dict
    seed: int
    index: int
    n: int
    m: int
    chi_upper: int | None = None
    chi: int | None = None
    graph: Graph | None = field(default=None, repr=False, compare=False)

    def record(self) -> dict:
        return {k: getattr(self, k) for k in
                ("path", "family", "params", "seed", "index", "n", "m", "chi_upper", "chi")}


def build_dataset(count: int, n_range, seed: int, out_dir, name: str = "manifest.jsonl") -> list[ManifestEntry]:
    """Write ``count`` graphs as DIMACS files plus a JSON-lines manifest. Byte-identical per seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = Path(out_dir)
    (out / "graphs").mkdir(parents=True, exist_ok=True)
    entries = []
    width = max(5, len(str(count - 1)))
    for i, smp in enumerate(generate_graphs(count, n_range, seed)):
        rel = f"graphs/{i:0{width}d}_{smp.family}.col"
        save_dimacs(smp.graph, out / rel, comment=f"{smp.family} {json.dumps(smp.params, sort_keys=True)}")
        entries.append(ManifestEntry(rel, smp.family, smp.params, seed, i, smp.graph.n, smp.graph.m,
                                     smp.chi_upper, smp.chi, smp.graph))
    with open(out / name, "w") as f:
        for e in entries:
            f.write(json.dumps(e.record(), sort_keys=True) + "\n")
    return entries


def load_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    entries = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            e = ManifestEntry(**rec)
            gpath = path.parent / e.path
            if not gpath.exists():
                raise FileNotFoundError(f"{path}:{lineno}: missing graph file {gpath}")
            e.graph = read_dimacs(gpath)
            if e.graph.n != e.n:
                raise ValueError(f"{path}:{lineno}: {gpath} has {e.graph.n} vertices, manifest says {e.n}")
            entries.append(e)
    return entries


# -- benchmark instances -------------------------------------------------------------


BUILTIN_INSTANCES = {
    "queen5_5": lambda: gen.gen_queen(5, 5),
    "queen6_6": lambda: gen.gen_queen(6, 6),
    "queen7_7": lambda: gen.gen_queen(7, 7),
    "queen8_8": lambda: gen.gen_queen(8, 8),
    "queen9_9": lambda: gen.gen_queen(9, 9),
    "queen8_12": lambda: gen.gen_queen(8, 12),
    "queen11_11": lambda: gen.gen_queen(11, 11),
    "queen13_13": lambda: gen.gen_queen(13, 13),
    "myciel5": lambda: gen.gen_mycielski(5),
    "myciel6": lambda: gen.gen_mycielski(6),
    "myciel7": lambda: gen.gen_mycielski(7),
}


@dataclass
class Reference:
    instance: str
    n: int
    chi: int
    values: dict  # published excess values, keyed by column name without the ref_ prefix


def reference_table() -> dict[str, Reference]:
    """Known chromatic numbers and published excess colours for the COLOR02 test instances."""
    text = resources.files("colourlab").joinpath("data/color02_reference.csv").read_text()
    out = {}
    for row in csv.DictReader(text.splitlines()):
        vals = {k[4:]: float(v) for k, v in row.items() if k.startswith("ref_")}
        out[row["instance"]] = Reference(row["instance"], int(row["n"]), int(row["chi"]), vals)
    return out


def load_instances(directory=None, names=None) -> dict[str, Graph]:
    """Benchmark graphs by name.

    Files ``<name>.col`` in ``directory`` take precedence; otherwise the
    instances that can be rebuilt exactly (queen and Mycielski graphs) are
    generated. Names with neither source are left out.
    """
    names = list(names) if names is not None else list(reference_table())
    found = {}
    d = Path(directory) if directory else None
    for name in names:
        if d is not None and (d / f"{name}.col").exists():
            found[name] = read_dimacs(d / f"{name}.col")
        elif name in BUILTIN_INSTANCES:
            found[name] = BUILTIN_INSTANCES[name]()
    return found


def instances_in_dir(directory) -> dict[str, Graph]:
    return {p.stem: read_dimacs(p) for p in sorted(Path(directory).glob("*.col"))}
