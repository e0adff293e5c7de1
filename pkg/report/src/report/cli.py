"""Command-line entry point: `report plot` and `report table`.

Exit codes: 0 success, 1 invalid input (no output file is written).
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .plotting import plot_convergence
from .tables import SummaryError, summarize
from .trajectory import SchemaError


def cmd_plot(args: argparse.Namespace) -> int:
    plot_convergence(args.csv, args.out)
    print(f"wrote {args.out} ({len(args.csv)} curves)")
    return 0


def cmd_table(args: argparse.Namespace) -> int:
    table = summarize(args.json)
    with open(args.out, "w") as fh:
        fh.write(table)
    print(f"wrote {args.out} ({len(args.json)} summaries)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="report",
        description="Figures and tables from optimization run outputs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    plot = sub.add_parser("plot", help="convergence figure from trajectory CSVs")
    plot.add_argument("--out", required=True, help="output SVG path")
    plot.add_argument("csv", nargs="+", help="trajectory CSV files")
    plot.set_defaults(func=cmd_plot)

    table = sub.add_parser("table", help="markdown summary table from run JSONs")
    table.add_argument("--out", required=True, help="output markdown path")
    table.add_argument("json", nargs="+", help="run summary JSON files")
    table.set_defaults(func=cmd_table)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, SummaryError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
