"""figures: render one report CSV into one figure file plus a data sidecar."""

from __future__ import annotations

import argparse
import sys

from .render import render
from .spec import KINDS, FigureError, FigureSpec, load_spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render cooccur report CSVs into figure files with exact data sidecars",
    )
    parser.add_argument("--spec", help="figure spec JSON (alternative to the flags below)")
    parser.add_argument("--kind", choices=KINDS)
    parser.add_argument("--input", action="append", default=[],
                        help="input CSV (repeatable for baseline-comparison)")
    parser.add_argument("--output", help="output image path (.png, .svg, .pdf)")
    parser.add_argument("--window", default=None, help="keep only rows at this window")
    parser.add_argument("--dimension", default=None, help="keep only rows of this dimension")
    parser.add_argument("--sidecar", default=None, help="sidecar CSV path (default: <output>.sidecar.csv)")
    parser.add_argument("--title", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.spec:
            spec = load_spec(args.spec)
        else:
            if not (args.kind and args.input and args.output):
                parser.error("either --spec or all of --kind/--input/--output are required")
            spec = FigureSpec(
                kind=args.kind,
                inputs=args.input,
                output=args.output,
                window=args.window,
                dimension=args.dimension,
                sidecar=args.sidecar,
                title=args.title,
            )
        out = render(spec)
    except (FigureError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out} and {spec.sidecar_path()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
