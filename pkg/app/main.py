import argparse
import sys
from typing import List, Optional

from app.cli.commands import analyze, design, fit, propagate, surface
from app.cli.run_logging import run_command
from app.core.logging_config import setup_logging

COMMANDS = (surface, design, propagate, analyze, fit)


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reactsim",
        description="Collinear A+BC reactions mapped onto cold-atom waveguides",
    )
    parser.add_argument("--config", default=None, help="run configuration (.cfg)")
    parser.add_argument("--out", default=None, help="output directory (default: output.directory)")
    parser.add_argument("--threads", type=_positive_int, default=None, help="FFT worker threads")
    parser.add_argument("--seed", type=int, default=None, help="reserved; nothing is stochastic yet")
    parser.add_argument("--quiet", action="store_true", help="console shows errors only")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(console_level="ERROR" if args.quiet else None)
    return run_command(args.command, args.handler, args)


if __name__ == "__main__":
    sys.exit(main())
