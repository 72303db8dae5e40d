"""Command-line surface: `decavg run`, `decavg gen-graph`, `decavg inspect`."""
from __future__ import annotations

import argparse
import json
import sys

from .config import load_config
from .engine import inspect_run, run_experiment
from .errors import DecAvgError
from .graphs import TopologyConfig, build_graph, save_edges


def _add_run(sub):
    p = sub.add_parser("run", help="run an experiment config, one directory per replicate")
    p.add_argument("config", help="path to the JSON experiment config")
    p.add_argument("--replicates", type=int, default=None,
                   help="override the replicate count from the config")
    p.add_argument("--out", default=None, help="override the output directory")
    p.add_argument("--quiet", action="store_true", help="suppress per-replicate progress")


def _add_gen_graph(sub):
    p = sub.add_parser("gen-graph", help="generate a topology and write its edge list")
    p.add_argument("--kind", required=True, choices=["er", "ba", "sbm"])
    p.add_argument("--n", type=int, default=None, help="node count (er/ba)")
    p.add_argument("--p", type=float, default=None, help="edge probability (er)")
    p.add_argument("--m", type=int, default=None, help="attachment count (ba)")
    p.add_argument("--block-sizes", default=None, help="comma list, e.g. 25,25,25,25 (sbm)")
    p.add_argument("--p-in", type=float, default=None, help="intra-block probability (sbm)")
    p.add_argument("--p-out", type=float, default=None, help="inter-block probability (sbm)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output edge-list file")


def _add_inspect(sub):
    p = sub.add_parser("inspect", help="print summary statistics for a run directory")
    p.add_argument("run_dir")


def _gen_graph(args) -> int:
    if args.kind == "sbm":
        if args.block_sizes is None or args.p_in is None or args.p_out is None:
            raise DecAvgError("sbm needs --block-sizes, --p-in and --p-out")
        sizes = [int(s) for s in args.block_sizes.split(",")]
        b = len(sizes)
        pm = [[args.p_in if i == j else args.p_out for j in range(b)] for i in range(b)]
        cfg = TopologyConfig(kind="sbm", block_sizes=sizes, p_matrix=pm, seed=args.seed)
    elif args.kind == "er":
        cfg = TopologyConfig(kind="er", n=args.n, p=args.p, seed=args.seed)
    else:
        cfg = TopologyConfig(kind="ba", n=args.n, m=args.m, seed=args.seed)
    graph = build_graph(cfg)
    save_edges(graph, args.out)
    print(f"wrote {graph.num_edges} edges for n={graph.n} to {args.out}")
    return 0


def _run(args) -> int:
    cfg = load_config(args.config)
    run_root, results = run_experiment(cfg, out_dir=args.out, replicates=args.replicates,
                                       verbose=not args.quiet)
    failed = [r for r in results if not r.ok]
    print(run_root)
    if failed:
        for r in failed:
            print(f"replicate {r.index} failed at stage {r.stage}: {r.error}", file=sys.stderr)
        return 1
    return 0


def _inspect(args) -> int:
    report = inspect_run(args.run_dir)
    print(json.dumps(report, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="decavg",
                                     description="decentralized federated averaging simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_gen_graph(sub)
    _add_inspect(sub)
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "gen-graph":
            return _gen_graph(args)
        return _inspect(args)
    except DecAvgError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
