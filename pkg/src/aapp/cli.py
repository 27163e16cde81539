"""Command line entry point: ``aapp {run,aggregate,wins,demo}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(missing or unparsable input, degenerate data).
"""

import argparse
import csv
import sys
from pathlib import Path

from . import bench
from .dataio import PreprocessSpec, gen_synthetic
from .errors import AAError, ConfigError
from .initializers import ChainConfig, initialize
from .matrix import RngStream
from .solver import mse, update_A

EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _list(kind):
    def parse(text):
        try:
            return tuple(kind(v) for v in text.split(",") if v.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} list: {text!r}") from None

    return parse


def _methods(text):
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in bench.METHODS]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {','.join(bench.METHODS)}")
    return methods


def _seeds(text):
    values = _list(int)(text)
    return values[0] if len(values) == 1 else values


def _add_data_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", metavar="PATH", help="CSV file of numeric rows")
    src.add_argument("--synthetic", choices=("ring", "polygon-hull", "gaussian-blob"))
    p.add_argument("--n", type=int, default=1000, help="synthetic point count (default 1000)")
    p.add_argument("--d", type=int, default=2, help="synthetic dimension (default 2)")
    p.add_argument("--noise", type=float, default=0.0, help="synthetic ring noise (default 0)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--header", action="store_true", help="skip the first CSV line")
    p.add_argument("--preprocess", choices=("none", "cms", "std"), default="none")
    p.add_argument("--signed-max", action="store_true", help="cms divides by the signed maximum")


def build_parser():
    parser = _Parser(prog="aapp", description="Archetypal analysis initialization benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a (method x k x seed) grid and write records.csv")
    _add_data_args(run)
    run.add_argument("--methods", type=_methods, default=bench.METHODS, help="comma list (default all)")
    run.add_argument("--k", type=_list(int), default=(15, 25, 50, 75, 100), help="comma list of k")
    run.add_argument("--iters", type=int, default=10)
    run.add_argument("--seeds", type=_seeds, default=50, help="count, or comma list of seed indices")
    run.add_argument("--chain-fracs", type=_list(float), default=(0.01, 0.05, 0.1, 0.2))
    run.add_argument("--base-seed", type=int, default=0)
    run.add_argument("--out", default="results", help="output directory (default ./results)")
    run.add_argument("--serial", action="store_true", help="run cells one at a time and record timings")
    run.add_argument("--workers", type=int, default=1, help="worker processes when not --serial")

    agg = sub.add_parser("aggregate", help="median and quartiles per (method, k, stage)")
    agg.add_argument("records", help="records.csv written by run")
    agg.add_argument("--out", help="output CSV (default: aggregate.csv next to the records)")

    wins = sub.add_parser("wins", help="win counts per method and k")
    wins.add_argument("records", help="records.csv written by run")
    wins.add_argument(
        "--mode",
        action="append",
        choices=("best-initialization", "best-overall", "median-initialization", "median-overall"),
        help="repeatable; default all four",
    )
    wins.add_argument("--out", help="output CSV (default: wins.csv next to the records)")

    demo = sub.add_parser("demo", help="2-D walkthrough of consecutive archetype picks")
    demo.add_argument("--shape", choices=("ring", "polygon-hull", "gaussian-blob"), default="ring")
    demo.add_argument("--n", type=int, default=100)
    demo.add_argument("--k", type=int, default=4)
    demo.add_argument("--noise", type=float, default=0.05)
    demo.add_argument("--method", choices=bench.METHODS, default="aapp")
    demo.add_argument("--chain-frac", type=float, default=0.2, help="chain fraction for aapp-mc")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--out", help="output CSV (default stdout)")
    return parser


def _cmd_run(args):
    data = args.data
    synthetic = None if data else (args.synthetic, args.n, args.d)
    if data and not Path(data).is_file():
        print(f"aapp: data file not found: {data}", file=sys.stderr)
        return EXIT_DATA
    config = bench.ExperimentConfig(
        data=data,
        synthetic=synthetic,
        noise=args.noise,
        delimiter=args.delimiter,
        has_header=args.header,
        preprocess=PreprocessSpec(args.preprocess, signed_max=args.signed_max),
        methods=args.methods,
        k_list=args.k,
        iters=args.iters,
        seeds=args.seeds,
        chain_fractions=args.chain_fracs,
        base_seed=args.base_seed,
        out_dir=args.out,
        serial=args.serial,
        workers=args.workers,
    )
    records = bench.run_grid(config)
    path = bench.write_records(records, Path(config.out_dir) / "records.csv")
    errors = sum(r.is_error for r in records)
    print(f"wrote {len(records)} records ({errors} error cells) to {path}")
    return 0


def _records(path):
    if not Path(path).is_file():
        raise FileNotFoundError(f"records file not found: {path}")
    return bench.read_records(path)


def _cmd_aggregate(args):
    table = bench.aggregate_quantiles(_records(args.records))
    out = args.out or Path(args.records).with_name("aggregate.csv")
    print(f"wrote {len(table)} groups to {bench.write_aggregate(table, out)}")
    return 0


def _cmd_wins(args):
    records = _records(args.records)
    modes = args.mode or ["best-initialization", "best-overall", "median-initialization", "median-overall"]
    tables = [bench.win_table(records, mode) for mode in modes]
    out = args.out or Path(args.records).with_name("wins.csv")
    print(f"wrote {len(tables)} win tables to {bench.write_wins(tables, out)}")
    return 0


def _cmd_demo(args):
    """One CSV row per pick: the chosen point and the MSE with the picks so far."""
    data_rng = RngStream(args.seed)
    X = gen_synthetic(args.shape, args.n, 2, data_rng, noise=args.noise)
    chain = ChainConfig(fraction=args.chain_frac) if args.method == "aapp-mc" else None
    picked = initialize(args.method, X, args.k, RngStream(args.seed + 1), chain=chain)
    rows = []
    for step in range(1, picked.k + 1):
        Z = picked.Z[:step]
        i = picked.source_indices[step - 1]
        rows.append([step, i, repr(float(X[i, 0])), repr(float(X[i, 1])), repr(mse(X, update_A(X, Z), Z))])
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "index", "x", "y", "mse"])
        writer.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


COMMANDS = {"run": _cmd_run, "aggregate": _cmd_aggregate, "wins": _cmd_wins, "demo": _cmd_demo}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"aapp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AAError, OSError) as exc:
        print(f"aapp: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
