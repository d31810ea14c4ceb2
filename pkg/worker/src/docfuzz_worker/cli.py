"""Entry point: `docfuzz-worker --target mock|module:<name>`."""

from __future__ import annotations

import argparse
import sys

from .server import serve_stdio


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="docfuzz-worker")
    parser.add_argument(
        "--target",
        default="mock",
        help="'mock' for the bundled fault target, or 'module:<name>' to import one",
    )
    args = parser.parse_args(argv)
    try:
        serve_stdio(args.target)
    except (ValueError, ImportError) as exc:
        print(f"docfuzz-worker: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
