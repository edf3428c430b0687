"""
Command-line entry point: datagen, solve, bench and audit subcommands.

Exit codes: 0 success, 1 runtime or bound failure, 2 usage error.
"""

import argparse
import logging
import sys
from typing import List, Optional

from app.cli import SUBCOMMANDS
from app.cli.common import global_flags
from app.core.config import settings
from app.core.errors import CLIError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kaczmarz",
        description="Cluster-accelerated Kaczmarz solvers, bound audits and benchmarks",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parents = [global_flags()]
    for subcommand in SUBCOMMANDS:
        subcommand.register(subparsers, parents)
    return parser


def configure_logging(level: Optional[str]) -> None:
    """Root logger to stderr; stdout carries only machine-readable lines"""
    logging.basicConfig(level=(level or settings.LOG_LEVEL).upper(), format=LOG_FORMAT,
                        stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        configure_logging(args.log_level)
    except ValueError as e:
        print(f"error: invalid --log-level: {e}", file=sys.stderr)
        return 2
    if args.wall_time:
        settings.RECORD_WALL_TIME = True

    try:
        return args.handler(args)
    except CLIError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
