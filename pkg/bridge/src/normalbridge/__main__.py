"""CLI entry: ``normalbridge serve --height H --width W [--channels C] [--seed N]``."""

from __future__ import annotations

import argparse
import sys

from .model import ModelSession
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="normalbridge")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("serve", help="serve the demonstration model over stdin/stdout")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--channels", type=int, default=3, choices=[1, 3])
    p.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    session = ModelSession(args.height, args.width, channels=args.channels, seed=args.seed)
    return serve(session)


if __name__ == "__main__":
    sys.exit(main())
