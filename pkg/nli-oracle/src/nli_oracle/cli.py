"""Command line entry point for the oracle server."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .app import DEFAULT_MODEL, ModelLoadError, OracleConfig, serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nli-oracle",
                                     description="Entailment oracle HTTP server")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"NLI model identifier (default {DEFAULT_MODEL})")
    parser.add_argument("--device", default="cpu", help="inference device (default cpu)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8841)
    parser.add_argument("--threshold", type=float, default=0.5,
                        help="entailment-probability threshold (default 0.5)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = OracleConfig(model=args.model, device=args.device, host=args.host,
                          port=args.port, threshold=args.threshold)
    try:
        serve(config)
    except ModelLoadError as exc:
        print(f"startup error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
