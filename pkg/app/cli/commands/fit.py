import argparse
import json
import os
from typing import Dict, Optional, Tuple

from app.cli.commands.common import output_directory
from app.core.logging_config import get_logger
from app.repositories.run_repository import RunRepository
from app.schemas.fit import FitProblem
from app.services.fit import fit
from app.utils.config_parser import load_config
from app.utils.errors import ConfigurationError, FitConvergenceError, StorageError, handle_command_errors

logger = get_logger(__name__)

RUN_BLOCKS = ("simulator", "grid", "packet", "cap", "schedule", "analysis")


def register(subparsers) -> None:
    parser = subparsers.add_parser("fit", help="fit surface parameters to target observables")
    parser.add_argument("problem", help="fit_problem.json")
    parser.set_defaults(handler=run)


def load_fit_problem(path: str, config_path: Optional[str] = None) -> Tuple[FitProblem, Dict[str, float]]:
    """
    Read a fit problem and its start overrides.

    The JSON names its run configuration under "config", relative to the JSON
    file; --config takes precedence. The configuration's reaction block is the
    starting surface, and a configuration with every run block also serves
    branching observables.

    Raises:
        StorageError: unreadable file
        ConfigurationError: malformed JSON or no configuration
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise StorageError(f"Cannot read fit problem {path}: {e}", details={"path": path}, original_exception=e)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}:{e.lineno}:{e.colno}: {e.msg}", details={"path": path})
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: a fit problem is a JSON object", details={"path": path})

    relative = data.pop("config", None)
    if config_path is None and relative is not None:
        config_path = os.path.join(os.path.dirname(os.path.abspath(path)), relative)
    if config_path is None:
        raise ConfigurationError(f"{path} names no configuration; add \"config\" or pass --config",
                                 details={"path": path})
    config = load_config(config_path)

    initial = data.pop("initial", None) or {}
    problem = FitProblem(
        surface=config.reaction.surface,
        run_config=None if config.missing_blocks(*RUN_BLOCKS) else config,
        **data,
    )
    return problem, initial


@handle_command_errors("fit")
def run(args: argparse.Namespace) -> int:
    problem, initial = load_fit_problem(args.problem, args.config)
    result = fit(problem, initial)

    repository = RunRepository(output_directory(args, problem.run_config))
    with repository.lock():
        path = repository.write_json("fit_result.json", result.to_json_dict())
    logger.info(f"Wrote fit result to {path}",
                extra={"path": path, "objective": result.objective, "converged": result.converged})
    if not result.converged:
        raise FitConvergenceError(f"Fit did not converge: {result.message}",
                                  details={"evaluations": result.evaluations, "objective": result.objective,
                                           "path": path})
    return 0
