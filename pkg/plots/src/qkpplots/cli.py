"""Script entry points: plot-convergence and plot-snapshot."""

from __future__ import annotations

import argparse
import sys

from .figures import plot_convergence, plot_snapshot
from .qkpf import FormatError
from .studycsv import SchemaError


def main_convergence(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="plot-convergence",
        description="log-log convergence figure from a study CSV",
    )
    parser.add_argument("--in", dest="input", required=True, help="study CSV path")
    parser.add_argument("--out", dest="output", required=True, help="image path")
    parser.add_argument("--column", default="h1_err_n")
    args = parser.parse_args(argv)
    try:
        plot_convergence(args.input, args.output, column=args.column)
    except (SchemaError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        sys.exit(2)
    print(f"wrote {args.output}")


def main_snapshot(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="plot-snapshot",
        description="heatmap of a QKPF field dump",
    )
    parser.add_argument("--in", dest="input", required=True, help="QKPF path")
    parser.add_argument("--out", dest="output", required=True, help="image path")
    parser.add_argument("--cmap", default="RdBu_r")
    args = parser.parse_args(argv)
    try:
        plot_snapshot(args.input, args.output, cmap=args.cmap)
    except (FormatError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        sys.exit(2)
    print(f"wrote {args.output}")
