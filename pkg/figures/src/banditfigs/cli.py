"""Command line for figure rendering from simulator CSV logs."""
from __future__ import annotations

import argparse
import os
import sys

from .render import KINDS, FigureSpec, GridMismatchError, SchemaMismatchError, render


def _parse_input(item: str) -> tuple[str, str]:
    """Split 'path[:label]' into (path, label); the default label is the
    file name without extension."""
    path, sep, label = item.rpartition(":")
    if not sep or not path or os.path.exists(item):
        path, label = item, ""
    if not label:
        label = os.path.splitext(os.path.basename(path))[0]
    return path, label


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandit-figures")
    sub = parser.add_subparsers(dest="command", required=True)
    rend = sub.add_parser("render", help="render one figure from CSV logs")
    rend.add_argument("--kind", required=True, choices=KINDS)
    rend.add_argument("--csv", required=True, nargs="+",
                      metavar="file.csv[:label]")
    rend.add_argument("--out", required=True, help="output image path")
    rend.add_argument("--regret-per-round", action="store_true",
                      help="plot regret divided by t")
    rend.add_argument("--no-bounds", action="store_true",
                      help="skip theoretical bound overlays")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        inputs=[_parse_input(item) for item in args.csv],
        kind=args.kind,
        out=args.out,
        regret_per_round=args.regret_per_round,
        show_bounds=not args.no_bounds,
    )
    try:
        out = render(spec)
    except (SchemaMismatchError, GridMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
