"""Figure rendering front end.

Exit codes: 0 success, 1 bad spec, missing columns, or unreadable input.
"""

from __future__ import annotations

import argparse
import sys

from .figspec import FigureSpec, render
from .loader import FigureError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condobs-figures",
        description="Render figures from simulation trace CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("voltages", help="stacked membrane-voltage panels")
    p.add_argument("trace", help="trace CSV")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=["png", "svg"])

    p = sub.add_parser("estimates",
                       help="parameter-estimate panels for three runs")
    p.add_argument("traces", nargs=3,
                   help="CSVs: non-distributed, distributed A, distributed B")
    p.add_argument("--block", required=True, help="parameter block, e.g. Na or G")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=["png", "svg"])

    p = sub.add_parser("render", help="render from a FigureSpec JSON")
    p.add_argument("spec", help="figure-spec JSON file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "voltages":
            spec = FigureSpec("voltages", (args.trace,), args.output,
                              format=args.format)
        elif args.command == "estimates":
            spec = FigureSpec("estimates", tuple(args.traces), args.output,
                              block=args.block, format=args.format)
        else:
            spec = FigureSpec.from_json(args.spec)
        out = render(spec)
    except (FigureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
