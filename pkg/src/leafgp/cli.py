"""Command line entry point: ``leafgp <subcommand>``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import bench
from .runner import (ConfigError, aggregate, history_csv, load_config, read_history,
                     run_bo, write_aggregate)


def _seeds(spec):
    """``101-105`` or ``101,103`` or a mix of both."""
    out = []
    for part in spec.split(","):
        if "-" in part.strip()[1:]:
            a, b = part.rsplit("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part.strip():
            out.append(int(part))
    return out


def _floats(spec):
    return [float(v) for v in spec.split(",") if v.strip()]


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def cmd_run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    _write(history_csv(run_bo(cfg)), args.out)
    return 0


def cmd_sweep(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in args.config:
        cfg = load_config(path)
        hists = []
        for seed in _seeds(args.seeds):
            logging.info("%s seed %d", Path(path).stem, seed)
            hists.append(run_bo(dataclasses.replace(cfg, seed=seed)))
        stem = f"{cfg.benchmark}_{cfg.algorithm}"
        (out_dir / f"{stem}_history.csv").write_text(history_csv(hists))
        with open(out_dir / f"{stem}_aggregate.csv", "w") as fh:
            write_aggregate(aggregate(hists), fh)
    return 0


def cmd_uncertainty(args):
    problem = bench.get(args.benchmark)
    rows = bench.uncertainty_sweep(problem, _seeds(args.seeds), _floats(args.r_grid), n_train=args.n_train)
    lines = ["R,seed,error,mean"]
    for R, seed, err, mu in rows:
        lines.append(f"{R!r},{seed},{'' if err is None else repr(err)},{mu!r}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_bench_list(args):
    for name in bench.names():
        print(bench.describe(bench.get(name)))
    return 0


def cmd_aggregate(args):
    hists = []
    for path in args.histories:
        with open(path, newline="") as fh:
            hists.extend(read_history(fh))
    if args.out in (None, "-"):
        write_aggregate(aggregate(hists), sys.stdout)
    else:
        with open(args.out, "w") as fh:
            write_aggregate(aggregate(hists), fh)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="leafgp", description="tree-kernel GP Bayesian optimization")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="one config, one seed")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="history CSV path (default stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="configs x seeds grid")
    p.add_argument("config", nargs="+")
    p.add_argument("--seeds", default="101-105")
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("uncertainty", help="tree-agreement cap study")
    p.add_argument("--benchmark", default="rastrigin")
    p.add_argument("--seeds", default="101-105")
    p.add_argument("--r-grid", default=",".join(f"{0.35 + 0.05 * i:.2f}" for i in range(14)))
    p.add_argument("--n-train", type=int, default=40)
    p.add_argument("--out")
    p.set_defaults(func=cmd_uncertainty)

    p = sub.add_parser("bench-list", help="list registered benchmarks")
    p.set_defaults(func=cmd_bench_list)

    p = sub.add_parser("aggregate", help="median and quartiles of history CSVs")
    p.add_argument("histories", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
