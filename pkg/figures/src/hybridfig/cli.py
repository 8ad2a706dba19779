"""Command line for rendering figures from a simulator output directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import SchemaError
from .render import KINDS, FigureJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridfig",
        description="Render paper-style figures from hybridsim CSV/JSON outputs.",
    )
    parser.add_argument("--input", type=Path, required=True,
                        help="simulator output directory")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--out", type=Path, required=True, help="output image path")
    parser.add_argument("--raw-wigner", action="store_true",
                        help="plot W as stored instead of W/Wmax per panel")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = FigureJob(
        input_dir=args.input,
        kind=args.kind,
        out_path=args.out,
        normalize=not args.raw_wigner,
        dpi=args.dpi,
    )
    try:
        path = render(job)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
