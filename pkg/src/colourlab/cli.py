"""``colourlab`` command line.

Exit status: 0 success, 1 unexpected failure, 2 usage or DIMACS parse error,
3 exact-solver node budget exhausted, 4 invalid configuration (bad flag
values, unknown heuristic, unreadable checkpoint), 5 training diverged.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import bench, generators as gen
from .datasets import (BUILTIN_INSTANCES, FAMILY_RANGES, build_dataset, generate_graphs, instances_in_dir,
                       load_instances, load_manifest)
from .dqn import TrainConfig, TrainingDiverged, evaluate, evaluate_multiseed, train
from .graph import (DimacsParseError, Graph, complete_graph, count_colours, cycle_graph, empty_graph,
                    is_valid_colouring, path_graph, petersen_graph, read_dimacs)
from .heuristics import exact_chromatic, run_baseline
from .neural import CheckpointError, load_params

log = logging.getLogger("colourlab")

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_BUDGET, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3, 4, 5
COLOR02_ENV = "COLOURLAB_COLOR02_DIR"


class ConfigError(Exception):
    pass


def load_graph(spec: str) -> Graph:
    """A DIMACS path, a bundled instance name, or a small generator spec.

    Generator specs: ``complete:N``, ``empty:N``, ``cycle:N``, ``path:N``,
    ``spinrad:M``, ``queen:RxC``, ``myciel:K``, ``petersen``.
    """
    p = Path(spec)
    if p.exists():
        return read_dimacs(p)
    d = os.environ.get(COLOR02_ENV)
    if d and (Path(d) / f"{spec}.col").exists():
        return read_dimacs(Path(d) / f"{spec}.col")
    if spec in BUILTIN_INSTANCES:
        return BUILTIN_INSTANCES[spec]()
    kind, _, arg = spec.partition(":")
    makers = {"complete": complete_graph, "empty": empty_graph, "cycle": cycle_graph, "path": path_graph,
              "spinrad": gen.gen_spinrad, "myciel": gen.gen_mycielski}
    try:
        if kind in makers and arg:
            return makers[kind](int(arg))
        if kind == "queen" and arg:
            r, c = arg.lower().split("x")
            return gen.gen_queen(int(r), int(c))
        if kind == "petersen" and not arg:
            return petersen_graph()
    except ValueError as e:
        raise ConfigError(f"bad graph spec {spec!r}: {e}") from None
    raise ConfigError(f"{spec!r} is neither a file, a bundled instance nor a generator spec")


def graph_name(spec: str) -> str:
    p = Path(spec)
    return p.stem if p.suffix == ".col" else spec.replace(":", "_")


def _split(s: str) -> list[str]:
    return [x for x in s.split(",") if x]


def _emit(args, text: str, default_name: str | None = None):
    """CSV text to --out (a file, or a directory when default_name is given) or stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    if default_name is not None and (out.is_dir() or not out.suffix):
        out = out / default_name
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(f"wrote {out}", file=sys.stderr)


def _write_colouring(path: Path, colours):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{v + 1} {int(c)}\n" for v, c in enumerate(colours)))


def _train_config(args, seed=None, topology=None) -> TrainConfig:
    return TrainConfig(
        episodes=args.episodes, lr=args.lr, batch_size=args.batch_size, tau=args.tau, gamma=args.gamma,
        eps_start=args.eps_start, eps_end=args.eps_end, buffer_capacity=args.buffer,
        grad_steps_per_action=args.grad_steps, eval_period=args.eval_period,
        seed=args.seed if seed is None else seed, topology=topology or args.topology,
        manifest=str(args.manifest) if args.manifest else None,
    )


def _train_val_graphs(args):
    if args.manifest:
        train_graphs = [e.graph for e in load_manifest(args.manifest)]
    else:
        train_graphs = [s.graph for s in generate_graphs(args.train_count, (args.n_min, args.n_max), args.data_seed)]
    if args.val_manifest:
        val_graphs = [e.graph for e in load_manifest(args.val_manifest)]
    else:
        val_graphs = [s.graph for s in generate_graphs(args.val_count, (args.n_min, args.n_max), args.data_seed + 1)]
    return train_graphs, val_graphs


# -- commands -------------------------------------------------------------------


def cmd_dataset(args):
    out = Path(args.out or "dataset")
    entries = build_dataset(args.count, (args.n_min, args.n_max), args.seed, out)
    counts = {}
    for e in entries:
        counts[e.family] = counts.get(e.family, 0) + 1
    print(f"wrote {len(entries)} graphs to {out}: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def cmd_benchmark(args):
    d = args.instances or os.environ.get(COLOR02_ENV)
    names = _split(args.names) if args.names else None
    if d and names is None and args.all_files:
        inst = instances_in_dir(d)
    else:
        inst = load_instances(d, names)
    if not inst:
        raise ConfigError("no benchmark instances found")
    rows = bench.benchmark(inst, _split(args.heuristics), args.checkpoint, args.random_runs, args.seed,
                           args.jobs, args.exact_limit)
    _emit(args, bench.format_csv(bench.BENCH_HEADER, rows), "benchmark.csv")
    return EXIT_OK


def cmd_spinrad(args):
    rows = bench.spinrad(args.m, _split(args.heuristics), args.checkpoint, args.random_runs, args.seed)
    _emit(args, bench.format_csv(bench.SPINRAD_HEADER, rows), "spinrad.csv")
    return EXIT_OK


def cmd_scaling(args):
    rows = bench.scaling(args.sizes, args.per_size, _split(args.heuristics), args.checkpoint, args.seed, args.jobs)
    _emit(args, bench.format_csv(bench.SCALING_HEADER, rows), "scaling.csv")
    return EXIT_OK


def cmd_ablation(args):
    base = _train_config(args, topology="complete")
    train_graphs, val_graphs = _train_val_graphs(args)
    out = Path(args.out or "ablation")
    summary = bench.ablation(base, args.seeds, train_graphs, val_graphs, out, args.val_seed,
                             progress=_progress(args))
    sys.stdout.write(bench.format_csv(bench.ABLATION_HEADER, summary["rows"]))
    for a in summary["audit"]:
        ok = a["same_graphs"] and a["same_first_vertices"] and a["same_paired_hash"]
        print(f"seed {a['seed']}: paired runs {'match' if ok else 'DIFFER'}", file=sys.stderr)
    return EXIT_OK


def cmd_exact(args):
    g = load_graph(args.instance)
    r = exact_chromatic(g, args.budget)
    if r.node_budget_hit:
        print(f"budget exhausted after {r.nodes} nodes: {r.lower_bound} <= chi <= {r.chromatic_number}")
        return EXIT_BUDGET
    print(r.chromatic_number)
    out = Path(args.out) if args.out else Path(f"{graph_name(args.instance)}.sol")
    _write_colouring(out, r.witness)
    return EXIT_OK


def cmd_color(args):
    g = load_graph(args.instance)
    if args.checkpoint:
        params = load_params(args.checkpoint)
        colours = evaluate(params, [g], args.seed, args.topology).colourings[0]
    else:
        if args.heuristic not in bench.BASELINES:
            raise ConfigError(f"unknown heuristic {args.heuristic!r}; choose from {', '.join(bench.BASELINES)} "
                              f"or pass --checkpoint")
        colours = run_baseline(args.heuristic, g, args.seed)
    if not is_valid_colouring(g, colours):
        print("internal error: invalid colouring", file=sys.stderr)
        return EXIT_FAIL
    print(count_colours(colours))
    if args.out:
        _write_colouring(Path(args.out), colours)
    return EXIT_OK


def _progress(args):
    if args.quiet:
        return None

    def report(*a):
        row = a[-1]
        if row["val_mean_colours"] is not None:
            prefix = " ".join(str(x) for x in a[:-1])
            print(f"{prefix} episode {row['episode']}: val {row['val_mean_colours']:.3f} "
                  f"eps {row['epsilon']:.3f} ({row['elapsed_s']:.0f}s)", file=sys.stderr, flush=True)
    return report


def cmd_train(args):
    cfg = _train_config(args)
    train_graphs, val_graphs = _train_val_graphs(args)
    out = Path(args.out or "run")
    try:
        res = train(cfg, train_graphs, val_graphs, out, args.val_seed, progress=_progress(args))
    except TrainingDiverged as e:
        print(f"{e}; last good checkpoint: {e.checkpoint}", file=sys.stderr)
        return EXIT_DIVERGED
    last = res.metrics[-1]["val_mean_colours"] if res.metrics else None
    print(json.dumps({"out": str(out), "config_hash": cfg.config_hash(), "final_val_mean": last}))
    return EXIT_OK


def cmd_evaluate(args):
    if args.manifest:
        entries = load_manifest(args.manifest)
        names, graphs = [Path(e.path).stem for e in entries], [e.graph for e in entries]
    else:
        if not args.graphs:
            raise ConfigError("give graphs or --manifest")
        names, graphs = [graph_name(s) for s in args.graphs], [load_graph(s) for s in args.graphs]
    stats, _ = evaluate_multiseed(args.checkpoint, graphs, args.seed, args.topology)
    rows = [{"graph": nm, "n": g.n, "mean_colours": m, "stderr": se, "checkpoints": len(args.checkpoint)}
            for nm, g, (m, se) in zip(names, graphs, stats)]
    _emit(args, bench.format_csv(("graph", "n", "mean_colours", "stderr", "checkpoints"), rows), "evaluate.csv")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _add_global(p, suppress=False):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="master seed (default 0)")
    p.add_argument("--out", default=d(None), help="output file or directory")
    p.add_argument("--jobs", type=int, default=d(1), help="worker processes for sweeps (default 1)")


def _add_training(p):
    t = p.add_argument_group("training")
    t.add_argument("--episodes", type=int, default=25000)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--batch-size", type=int, default=64)
    t.add_argument("--tau", type=float, default=1e-3)
    t.add_argument("--gamma", type=float, default=1.0)
    t.add_argument("--eps-start", type=float, default=0.9)
    t.add_argument("--eps-end", type=float, default=0.01)
    t.add_argument("--buffer", type=int, default=50_000, help="replay capacity")
    t.add_argument("--grad-steps", type=int, default=1, help="gradient steps per decision")
    t.add_argument("--eval-period", type=int, default=100)
    t.add_argument("--val-seed", type=int, default=0, help="first-vertex seed for validation rollouts")
    t.add_argument("--quiet", action="store_true")
    dset = p.add_argument_group("data (generated unless manifests are given)")
    dset.add_argument("--manifest", help="training manifest from 'colourlab dataset'")
    dset.add_argument("--val-manifest")
    dset.add_argument("--train-count", type=int, default=1000)
    dset.add_argument("--val-count", type=int, default=100)
    dset.add_argument("--n-min", type=int, default=15)
    dset.add_argument("--n-max", type=int, default=50)
    dset.add_argument("--data-seed", type=int, default=0, help="validation data uses data-seed + 1")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="colourlab", description=__doc__.split("\n")[0],
                                 epilog="Exit status: 0 ok, 1 failure, 2 usage/parse error, 3 node budget, "
                                        "4 bad configuration, 5 training diverged.")
    _add_global(ap)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, **kw):
        p = sub.add_parser(name, help=help_, description=help_, **kw)
        _add_global(p, suppress=True)
        p.set_defaults(fn=fn)
        return p

    ranges = "\n".join(f"  {k:<20} {v}" for k, v in FAMILY_RANGES.items())
    p = add("dataset", cmd_dataset, "write a mixed-family training set (DIMACS + manifest.jsonl)",
            formatter_class=argparse.RawDescriptionHelpFormatter, epilog="family parameter ranges:\n" + ranges)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--n-min", type=int, default=15)
    p.add_argument("--n-max", type=int, default=50)

    h_all = ",".join(bench.HEURISTICS)
    p = add("benchmark", cmd_benchmark, "excess colours on benchmark instances")
    p.add_argument("--instances", help=f"directory of .col files (default ${COLOR02_ENV}; bundled queens/myciel otherwise)")
    p.add_argument("--names", help="comma-separated instance names (default: the reference table)")
    p.add_argument("--all-files", action="store_true", help="every .col file in --instances")
    p.add_argument("--heuristics", default="random,lf,sl,dsatur", help=f"subset of {h_all}")
    p.add_argument("--checkpoint", nargs="*", default=[], help="policy checkpoints for 'dqn'")
    p.add_argument("--random-runs", type=int, default=100)
    p.add_argument("--exact-limit", type=int, default=30, help="solve chi exactly up to this many vertices")

    p = add("spinrad", cmd_spinrad, "heuristics on Spinrad graphs")
    p.add_argument("--m", type=int, nargs="+", default=[4, 5, 6, 7, 8])
    p.add_argument("--heuristics", default="dsatur", help=f"subset of {h_all}")
    p.add_argument("--checkpoint", nargs="*", default=[])
    p.add_argument("--random-runs", type=int, default=100)

    p = add("scaling", cmd_scaling, "mean colours against graph size")
    p.add_argument("--sizes", type=int, nargs="+", default=[25, 50, 100, 200, 300, 400, 500])
    p.add_argument("--per-size", type=int, default=30)
    p.add_argument("--heuristics", default="random,dsatur", help=f"subset of {h_all}")
    p.add_argument("--checkpoint", nargs="*", default=[])

    p = add("ablation", cmd_ablation, "complete vs topology-preserving encoding, paired seeds")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    _add_training(p)

    p = add("exact", cmd_exact, "chromatic number and witness colouring")
    p.add_argument("instance", help="DIMACS file, bundled name, or generator spec such as complete:5")
    p.add_argument("--budget", type=int, default=2_000_000, help="search node budget")

    p = add("color", cmd_color, "colour one graph with a heuristic or a checkpoint")
    p.add_argument("instance")
    p.add_argument("--heuristic", default="dsatur")
    p.add_argument("--checkpoint")
    p.add_argument("--topology", default="complete", choices=("complete", "original"))

    p = add("train", cmd_train, "train a policy (checkpoints and metrics.csv under --out)")
    p.add_argument("--topology", default="complete", choices=("complete", "original"))
    _add_training(p)

    p = add("evaluate", cmd_evaluate, "per-graph mean and stderr of colours across checkpoints")
    p.add_argument("graphs", nargs="*")
    p.add_argument("--manifest")
    p.add_argument("--checkpoint", nargs="+", required=True)
    p.add_argument("--topology", default="complete", choices=("complete", "original"))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except DimacsParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, CheckpointError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
