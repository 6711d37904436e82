"""Command line entry point: nlcplots <kind> <input> <output>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import PLOT_KINDS, PlotJob, run_job


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlcplots",
        description="Render figures from nlcsim CSV series and NLC1 snapshots.")
    parser.add_argument("kind", choices=PLOT_KINDS,
                        help="energy/residual/maxd take a series.csv, "
                             "field takes an .nlc1 snapshot")
    parser.add_argument("input", help="input file path")
    parser.add_argument("output", help="output image path (png)")
    return parser


def cli(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    job = PlotJob(Path(args.input), args.kind, Path(args.output))
    try:
        out = run_job(job)
    except (ValueError, OSError) as exc:
        print(f"nlcplots: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


def main() -> None:
    sys.exit(cli())
