"""Command line wrapper: flowplots render --in <dir> --out <dir> [--figs ...]."""

import argparse
import sys

from .io import ContractError
from .render import FIGURES, PlotJob, render


def main(argv=None):
    parser = argparse.ArgumentParser(prog="flowplots")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render figures from a run output directory")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--figs", default=",".join(FIGURES),
                   help="comma-separated subset of decay,functionals,profile,gaps")
    args = parser.parse_args(argv)

    figures = tuple(f for f in args.figs.split(",") if f)
    try:
        job = PlotJob(args.in_dir, args.out_dir, figures)
        written = render(job)
    except (ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
