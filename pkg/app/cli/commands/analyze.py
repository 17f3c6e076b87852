import argparse
from typing import Dict, Optional, Tuple

from app.cli.commands.common import load_run_config, output_directory
from app.cli.commands.propagate import SUMMARY
from app.core.logging_config import get_logger
from app.repositories.run_repository import RunRepository, snapshot_step
from app.services.analysis import find_saddle
from app.services.simulation_service import SimulationService
from app.utils.errors import ConfigurationError, handle_command_errors

logger = get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("analyze", help="branching ratios and vibrational distributions of a snapshot")
    parser.add_argument("--snapshot", default=None, help="snap_<step>.csv to analyse (default: latest in the run)")
    parser.add_argument("--run-dir", default=None, help="run directory (default: --out or output.directory)")
    parser.set_defaults(handler=run)


def _snapshot_context(repository: RunRepository, step: int, dt: float) -> Tuple[float, Optional[Dict[str, float]]]:
    """Time and absorbed ledger of a snapshot, from the run summary when there is one."""
    if repository.exists(SUMMARY):
        for record in repository.read_json(SUMMARY)["snapshots"]:
            if record["step"] == step:
                return record["time"], record["absorbed"]
    logger.warning(f"No summary record for step {step}; ledger populations are skipped", extra={"step": step})
    return step * dt, None


@handle_command_errors("analyze")
def run(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    setup = SimulationService.prepare(config)
    repository = RunRepository(args.run_dir or output_directory(args, config))

    path = args.snapshot or repository.latest_snapshot()
    if path is None:
        raise ConfigurationError(f"No snapshots in {repository.directory}", details={"directory": repository.directory})
    step = snapshot_step(path)
    time_value, absorbed = _snapshot_context(repository, step, setup.dt)
    psi = repository.read_snapshot(path, setup.grid, time_value)

    report = SimulationService.analyze(setup, psi, absorbed)
    saddle = find_saddle(setup.surface, factors=setup.factors, scaling=setup.scaling)

    with repository.lock():
        repository.write_json("branching_ratios.json", report.branching_json())
        repository.write_json("vib_distribution.json", report.distributions_json())
        repository.write_json("saddle.json", saddle.to_json_dict())

    for channel, distribution in report.distributions.items():
        if distribution.populations:
            logger.info(f"{channel} channel peaks at n = {distribution.peak}",
                        extra={"channel": channel, "step": step, "population": distribution.channel_population})
    return 0
