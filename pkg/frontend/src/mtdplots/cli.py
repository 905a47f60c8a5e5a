"""Command-line front end: ``plot <kind> <csv...> -o <file>``."""

import argparse
import sys

from .figures import KINDS, FigureSpec, PlotError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot", description="Render a figure from experiment CSV logs.")
    parser.add_argument("kind", choices=sorted(KINDS), help="figure kind")
    parser.add_argument("csv", nargs="+", help="input CSV file(s)")
    parser.add_argument("-o", "--output", required=True, help="output image (.svg or .png)")
    parser.add_argument("--title")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--no-legend", action="store_true")
    parser.add_argument("--envelope-c", type=float, help="dashed envelope constant (mixing)")
    parser.add_argument("--envelope-rate", type=float, help="dashed envelope rate per step (mixing)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        spec = FigureSpec(
            inputs=tuple(args.csv),
            kind=args.kind,
            output=args.output,
            title=args.title,
            legend=not args.no_legend,
            dpi=args.dpi,
            envelope_c=args.envelope_c,
            envelope_rate=args.envelope_rate,
        )
        notes = render(spec)
    except PlotError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for key in sorted(notes):
        print(f"{key}={notes[key]!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
