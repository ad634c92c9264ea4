"""Command-line entry point: ``plots render --kind <k> --csv <path> --out <img>``."""

import argparse
import sys

from .render import KINDS, EmptyData, PlotSpec, SchemaMismatch, render


def main(argv=None):
    parser = argparse.ArgumentParser(prog="plots", description="Render eigshrink CSV results")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--csv", required=True, action="append",
                   help="input CSV; repeat for one panel per file (snr_sweep)")
    p.add_argument("--out", required=True, help="output image path (.png or .svg)")
    p.add_argument("--title", default="")
    args = parser.parse_args(argv)

    spec = PlotSpec(csv_paths=tuple(args.csv), kind=args.kind, out_path=args.out, title=args.title)
    try:
        out = render(spec)
    except (SchemaMismatch, EmptyData, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
