"""Plot CLI: render figures from spheregp output files.

Usage:
    sphereplot field --in FIELD.csv [FIELD2.csv ...] --out FIG.png
    sphereplot scores --in SCORES.json [...] --out TABLE.png [--csv TABLE.csv]

Exit codes: 0 success, 1 usage, 2 input/schema error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .fields import render_fields
from .io import SchemaError
from .scores import render_scores

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCHEMA = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sphereplot", description="Render figures from spheregp outputs")
    sub = parser.add_subparsers(dest="kind", required=True)

    p_field = sub.add_parser("field", help="heatmap(s) of simulated fields")
    p_field.add_argument("--in", dest="inputs", nargs="+", required=True, type=Path)
    p_field.add_argument("--out", required=True, type=Path)
    p_field.add_argument("--titles", nargs="*", default=None, help="panel titles (one per input)")

    p_scores = sub.add_parser("scores", help="score comparison table")
    p_scores.add_argument("--in", dest="inputs", nargs="+", required=True, type=Path)
    p_scores.add_argument("--out", required=True, type=Path)
    p_scores.add_argument("--csv", type=Path, default=None, help="also write the table as CSV")

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    missing = [str(p) for p in args.inputs if not p.exists()]
    if missing:
        print(f"error: input files not found: {', '.join(missing)}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        if args.kind == "field":
            out = render_fields(args.inputs, args.out, titles=args.titles)
        else:
            out = render_scores(args.inputs, args.out, out_csv=args.csv)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
