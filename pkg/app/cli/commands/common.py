import argparse
from typing import List, Optional, Tuple

from app.schemas.config import RunConfig
from app.utils.config_parser import load_config
from app.utils.errors import ConfigurationError, UsageError
from app.utils.units import LENGTH, parse_quantity

DEFAULT_OUTPUT = "runs"


def load_run_config(args: argparse.Namespace) -> RunConfig:
    if not args.config:
        raise UsageError(f"--config is required for '{args.command}'")
    return load_config(args.config)


def output_directory(args: argparse.Namespace, config: Optional[RunConfig] = None) -> str:
    if args.out:
        return args.out
    return config.output.directory if config is not None else DEFAULT_OUTPUT


def parse_window(values: List[str]) -> Tuple[float, float, float, float]:
    """
    Raises:
        UsageError: unparseable or empty window
    """
    try:
        x_min, x_max, y_min, y_max = (parse_quantity(value, LENGTH) for value in values)
    except ConfigurationError as e:
        raise UsageError(f"Bad --window value: {e.message}")
    if not (x_min < x_max and y_min < y_max):
        raise UsageError("Empty --window: each minimum must be below its maximum",
                         details={"window": values})
    return x_min, x_max, y_min, y_max
