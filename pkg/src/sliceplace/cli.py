"""Command-line entry point: ``sliceplace {run,sweep,replay,cluster-info,gen-topology}``."""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import os
import sys
import time
from pathlib import Path

from . import __version__
from .clustering import louvain, modularity
from .config import (ConfigError, build_experiment, format_config, load_config, parse_lines,
                     resolve_key, split_override)
from .simulation import (SUMMARY_KEYS, build_clustering, request_generator, run_replications,
                         write_outputs)
from .topology import TopologyError, community_graph, format_topology, load_topology
from .workload import write_trace

EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 2, 3, 4
OUTPUT_ENV = "SLICEPLACE_OUTPUT_DIR"


def _experiment(args, extra=()):
    overrides = [split_override(o) for o in args.overrides]
    for flag, key in (("seed", "sim.seed"), ("reps", "sim.reps"), ("policy", "policy.name")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides.append((key, str(value)))
    overrides.extend(extra)
    exp = load_config(args.config, overrides)
    if os.environ.get(OUTPUT_ENV):
        exp.output_dir = os.environ[OUTPUT_ENV]
    if getattr(args, "out", None):
        exp.output_dir = args.out
    return exp


def _log(out_dir: Path, message: str) -> None:
    # wall-clock stamps live only here so metric files stay reproducible
    with open(out_dir / "run.log", "a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {message}\n")


def _run_experiment(exp, label: str) -> int:
    out = Path(exp.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(format_config(exp))
    summary = run_replications(exp.sim, keep_traces=True)
    for r, trace in enumerate(summary.traces):
        write_outputs(trace, out, stem=f"metrics_r{r:03d}")
    (out / "summary.csv").write_text(summary.to_csv())
    if exp.write_trace:
        gen = request_generator(exp.sim, replication=0)
        reqs = [r for t in range(1, exp.sim.horizon + 1) for r in gen.arrivals_for_slot(t)]
        write_trace(reqs, out / "requests.csv")
    _log(out, f"{label} policy={exp.sim.policy} topology={exp.sim.topology} "
              f"reps={exp.sim.replications} mean_ms_per_slot={summary.mean['ms_per_slot']:.3f}")
    m = summary.mean
    print(f"{exp.sim.policy} on {exp.sim.topology}: acceptance {m['acc_ratio']:.4f}, "
          f"mean cpu utilization {m['mean_util_cpu']:.4f} over {exp.sim.replications} run(s) -> {out}")
    return 0


def cmd_run(args) -> int:
    return _run_experiment(_experiment(args), "run")


def cmd_replay(args) -> int:
    if not Path(args.trace).exists():
        raise FileNotFoundError(f"trace file not found: {args.trace}")
    return _run_experiment(_experiment(args, [("workload.trace", args.trace)]), "replay")


def cmd_sweep(args) -> int:
    base = _experiment(args)
    grid = []
    for item in args.vary:
        key, values = split_override(item)
        key = resolve_key(key)
        grid.append((key, [v for v in values.split(",") if v]))
    if not grid:
        raise ConfigError("sweep needs at least one --vary key=v1,v2")
    out = Path(base.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    base_pairs = parse_lines(Path(args.config).read_text()) if args.config else []
    base_pairs += [split_override(o) for o in args.overrides]
    for flag, key in (("seed", "sim.seed"), ("reps", "sim.reps"), ("policy", "policy.name")):
        if getattr(args, flag, None) is not None:
            base_pairs.append((key, str(getattr(args, flag))))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = [k for k, _ in grid]
    w.writerow(keys + [f"{s}_mean" for s in SUMMARY_KEYS] + [f"{s}_std" for s in SUMMARY_KEYS])
    for combo in itertools.product(*(vals for _, vals in grid)):
        exp = build_experiment(base_pairs + list(zip(keys, combo)))
        summary = run_replications(exp.sim)
        w.writerow(list(combo)
                   + [_num(summary.mean[s]) for s in SUMMARY_KEYS]
                   + [_num(summary.std[s]) for s in SUMMARY_KEYS])
        print(" ".join(f"{k}={v}" for k, v in zip(keys, combo))
              + f": acceptance {summary.mean['acc_ratio']:.4f}")
    (out / "sweep_summary.csv").write_text(buf.getvalue())
    _log(out, f"sweep over {', '.join(keys)}")
    return 0


def _num(v) -> str:
    return "" if v != v else repr(float(v))


def cmd_cluster_info(args) -> int:
    exp = _experiment(args)
    graph = load_topology(exp.sim.topology)
    clustering = build_clustering(graph, exp.sim, exp.sim.seed)
    print(f"{graph.name}: {graph.n_nodes} nodes, {graph.n_links} links, {clustering.k} clusters, "
          f"modularity {modularity(graph, clustering.labels):.4f}")
    for k, nodes in enumerate(clustering.members):
        print(f"  cluster {k}: {len(nodes)} nodes {nodes}")
    plain = louvain(graph, exp.sim.resolution, exp.sim.seed)
    print(f"  (plain Louvain at resolution {exp.sim.resolution}: {plain.k} clusters)")
    out = Path(exp.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "clusters.csv").write_text(clustering.to_csv())
    return 0


def cmd_gen_topology(args) -> int:
    sizes = [int(s) for s in args.communities.split(",")]
    graph = community_graph(sizes, args.links, args.inter_fraction, args.seed)
    text = format_topology(graph, comment=(
        f"community_graph({sizes}, {args.links}, inter_fraction={args.inter_fraction}, rng={args.seed})"))
    Path(args.output).write_text(text)
    print(f"wrote {graph.n_nodes} nodes / {graph.n_links} links to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sliceplace", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--reps", type=int)
        sp.add_argument("--policy")
        sp.add_argument("overrides", nargs="*", metavar="key=value")

    sp = sub.add_parser("run", help="simulate one configuration")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("replay", help="simulate on a recorded request trace")
    common(sp)
    sp.add_argument("--trace", required=True)
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("sweep", help="cartesian product over --vary parameters")
    common(sp)
    sp.add_argument("--vary", action="append", default=[], metavar="key=v1,v2")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("cluster-info", help="print the clustering of a topology")
    common(sp)
    sp.set_defaults(func=cmd_cluster_info)

    sp = sub.add_parser("gen-topology", help="write a synthetic community topology")
    sp.add_argument("--communities", default="14,14,14,13,13")
    sp.add_argument("--links", type=int, default=272)
    sp.add_argument("--inter-fraction", type=float, default=0.15)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_gen_topology)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TopologyError as exc:
        print(f"topology error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        name = getattr(exc, "filename", None)
        print(f"io error: {exc.strerror or exc}{f': {name}' if name else ''}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
