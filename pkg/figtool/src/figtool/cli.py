"""Command-line renderer: `figs --in metrics.csv --kind delay_vs_n --out fig.svg`."""

from __future__ import annotations

import argparse
import json
import sys

from figtool.render import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figs", description="render experiment CSVs to figures")
    parser.add_argument("--in", dest="input_csv", required=True, help="input CSV path")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--out", dest="output_path", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(FigureSpec(input_csv=args.input_csv, kind=args.kind, output_path=args.output_path))
        print(json.dumps({"status": "ok", "kind": args.kind, "out": args.output_path}))
        return 0
    except (SchemaError, OSError, ValueError) as exc:
        print(
            json.dumps({"status": "error", "kind": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
