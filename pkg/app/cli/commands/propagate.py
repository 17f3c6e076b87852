import argparse
from typing import Dict, List

from app.cli.commands.common import load_run_config, output_directory
from app.core.logging_config import get_logger
from app.repositories.run_repository import RunRepository, snapshot_step
from app.services.analysis import channel_populations
from app.services.simulation_service import RunSetup, SimulationService
from app.utils.errors import ConfigurationError, handle_command_errors

logger = get_logger(__name__)

SUMMARY = "run_summary.json"
FLUX = "flux_distribution.json"


def register(subparsers) -> None:
    parser = subparsers.add_parser("propagate", help="propagate the initial packet and write snapshots")
    parser.add_argument("--resume", default=None, metavar="SNAPSHOT",
                        help="continue from snap_<step>.csv of an earlier run in the output directory")
    parser.add_argument("--no-flux", action="store_true", help="skip the flux vibrational analysis")
    parser.set_defaults(handler=run)


def _resume_point(repository: RunRepository, path: str):
    """Snapshot record of the earlier run at the step of `path`."""
    step = snapshot_step(path)
    summary = repository.read_json(SUMMARY)
    for record in summary["snapshots"]:
        if record["step"] == step:
            return summary, record
    raise ConfigurationError(f"{SUMMARY} has no record for step {step}", details={"step": step})


def summary_json(setup: RunSetup, snapshots: List[Dict], result) -> Dict:
    populations = channel_populations(result, setup.partition)
    return {
        "dt": setup.dt,
        "n_steps": setup.schedule.n_steps,
        "stride": setup.schedule.stride,
        "grid": setup.grid.to_dict(),
        "velocity": setup.packet.velocity,
        "snapshots": snapshots,
        "final_norm": result.final.norm(),
        "absorbed": dict(result.absorbed),
        "bookkeeping_error": result.bookkeeping_error,
        "populations": populations.to_json_dict(),
    }


@handle_command_errors("propagate")
def run(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    setup = SimulationService.prepare(config)
    repository = RunRepository(output_directory(args, config))

    with repository.lock():
        previous: List[Dict] = []
        psi0, absorbed = None, None
        if args.resume:
            summary, record = _resume_point(repository, args.resume)
            psi0 = repository.read_snapshot(args.resume, setup.grid, record["time"])
            absorbed = record["absorbed"]
            previous = [r for r in summary["snapshots"] if r["step"] < psi0.step]
            logger.info(f"Resuming from step {psi0.step}", extra={"step": psi0.step, "path": args.resume})
        else:
            repository.write_config(config)

        def on_snapshot(wavefunction, record):
            repository.write_snapshot(wavefunction)

        result, distributions = SimulationService.run(
            setup, psi0=psi0, absorbed=absorbed, on_snapshot=on_snapshot,
            workers=args.threads, with_flux=not args.no_flux,
        )

        records = previous + [record.dict() for record in result.snapshots]
        repository.write_json(SUMMARY, summary_json(setup, records, result))
        if distributions:
            repository.write_json(FLUX, {channel: dist.to_json_dict() for channel, dist in distributions.items()})
        elif args.resume:
            logger.warning("Flux distributions need a run from step 0; leaving any earlier ones untouched")

    logger.info(f"Propagation finished at step {result.final.step}",
                extra={"step": result.final.step, "absorbed": result.absorbed})
    return 0
