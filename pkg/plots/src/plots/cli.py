"""`plots <kind> --in <csv> --out <img> [--threshold <float>]`"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import REQUIRED_COLUMNS, FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from simulator CSV outputs"
    )
    parser.add_argument("kind", choices=sorted(REQUIRED_COLUMNS))
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", dest="output_image", required=True)
    parser.add_argument("--threshold", type=float, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        input_csv=Path(args.input_csv),
        output_image=Path(args.output_image),
        threshold=args.threshold,
    )
    try:
        out = render(spec)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
