import json
import math

import numpy as np
import pytest

from colourlab import datasets as ds
from colourlab.generators import FAMILIES
from colourlab.graph import is_valid_colouring
from colourlab.heuristics import exact_chromatic


def test_generate_graphs_reproducible_and_in_range():
    a = ds.generate_graphs(40, (10, 15), 3)
    b = ds.generate_graphs(40, (10, 15), 3)
    assert [x.graph for x in a] == [x.graph for x in b]
    assert all(10 <= x.graph.n <= 15 for x in a)
    assert {x.family for x in a} <= set(FAMILIES)
    # graph i depends only on (seed, i)
    assert ds.generate_graphs(5, (10, 15), 3)[4].graph == a[4].graph


def test_all_families_appear():
    fam = {x.family for x in ds.generate_graphs(200, (15, 50), 0)}
    assert fam == set(FAMILIES)


@pytest.mark.parametrize("family", FAMILIES)
def test_family_parameters_in_documented_ranges(family):
    rng = np.random.default_rng(1)
    for _ in range(30):
        smp = ds.sample_graph((15, 50), rng, families=(family,))
        n = smp.graph.n
        p = smp.params
        r = math.isqrt(n)
        if family == "erdos_renyi":
            assert 0.1 <= p["p"] <= 0.9
        elif family == "watts_strogatz":
            assert p["k"] % 2 == 0 and 2 <= p["k"] <= max(2, r) and 0.1 <= p["beta"] <= 0.3
        elif family == "barabasi_albert":
            assert 2 <= p["m_attach"] <= r
        elif family == "queen":
            assert 2 <= p["rows"] <= p["cols"] and p["rows"] * p["cols"] == smp.graph.n
        elif family == "gaussian_partition":
            assert 2 <= p["mean_size"] <= math.sqrt(n) and math.sqrt(n) <= p["shape"] <= n / 2
            assert 0.5 <= p["p_in"] <= 1 and 0 <= p["p_out"] <= p["p_in"] / 2
        else:
            assert 2 <= p["k"] <= r and 0.1 <= p["p"] <= 0.9
            assert smp.chi_upper == p["k"]


def test_planted_chi_agrees_with_solver():
    rng = np.random.default_rng(5)
    for _ in range(10):
        smp = ds.sample_family_graph("leighton_like", int(rng.integers(8, 16)), rng)
        assert exact_chromatic(smp.graph).chromatic_number == smp.chi
        smp = ds.sample_family_graph("known_chromatic", int(rng.integers(8, 16)), rng)
        assert exact_chromatic(smp.graph).chromatic_number <= smp.chi_upper


def test_bad_inputs():
    with pytest.raises(ValueError):
        ds.sample_family_graph("grid", 10, np.random.default_rng(0))
    with pytest.raises(ValueError):
        ds.generate_graphs(3, (5, 4), 0)
    with pytest.raises(ValueError):
        ds.build_dataset(0, (5, 6), 0, "unused")


def test_build_and_load_manifest(tmp_path):
    entries = ds.build_dataset(7, (10, 12), 11, tmp_path / "a")
    ds.build_dataset(7, (10, 12), 11, tmp_path / "b")
    for f in sorted((tmp_path / "a").rglob("*")):
        if f.is_file():
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()
    loaded = ds.load_manifest(tmp_path / "a" / "manifest.jsonl")
    assert [e.graph for e in loaded] == [e.graph for e in entries]
    rec = json.loads((tmp_path / "a" / "manifest.jsonl").read_text().splitlines()[0])
    assert set(rec) == {"path", "family", "params", "seed", "index", "n", "m", "chi_upper", "chi"}


def test_manifest_errors(tmp_path):
    ds.build_dataset(2, (10, 12), 0, tmp_path)
    lines = (tmp_path / "manifest.jsonl").read_text().splitlines()
    rec = json.loads(lines[0])
    rec["n"] += 1
    (tmp_path / "bad.jsonl").write_text(json.dumps(rec) + "\n")
    with pytest.raises(ValueError):
        ds.load_manifest(tmp_path / "bad.jsonl")
    rec["path"] = "graphs/missing.col"
    (tmp_path / "bad.jsonl").write_text(json.dumps(rec) + "\n")
    with pytest.raises(FileNotFoundError):
        ds.load_manifest(tmp_path / "bad.jsonl")


def test_reference_table():
    t = ds.reference_table()
    assert len(t) == 20
    assert t["queen5_5"].n == 25 and t["queen5_5"].chi == 5
    assert t["myciel5"].chi == 6 and t["myciel5"].n == 47
    assert t["huck"].values["random_mean"] == 0
    assert np.mean([r.values["dsatur"] for r in t.values()]) == pytest.approx(1.2)


def test_builtin_instances_match_table():
    t = ds.reference_table()
    for name, g in ds.load_instances().items():
        assert g.n == t[name].n


def test_instance_files_take_precedence(tmp_path):
    from colourlab.graph import complete_graph, save_dimacs
    save_dimacs(complete_graph(25), tmp_path / "queen5_5.col")
    got = ds.load_instances(tmp_path, ["queen5_5", "huck"])
    assert list(got) == ["queen5_5"] and got["queen5_5"].m == 300
    assert list(ds.instances_in_dir(tmp_path)) == ["queen5_5"]
