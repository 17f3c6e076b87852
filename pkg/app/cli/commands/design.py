import argparse

from app.cli.commands.common import load_run_config, output_directory
from app.core.logging_config import get_logger
from app.repositories.run_repository import RunRepository
from app.schemas.frames import DesignReport
from app.services.simulation_service import SimulationService
from app.utils.errors import UsageError, ConfigurationError, handle_command_errors
from app.utils.units import FREQUENCY, parse_quantity

logger = get_logger(__name__)

TABLE_ROWS = (
    ("nu_tilde_1_hz", "product transverse frequency", "Hz"),
    ("nu_tilde_2_hz", "reactant transverse frequency", "Hz"),
    ("v_tilde_1_uK", "product valley depth", "uK"),
    ("v_tilde_2_uK", "reactant valley depth", "uK"),
    ("v_q1_mm_s", "thermal launch velocity", "mm/s"),
    ("l", "scaling factor l", ""),
    ("tau_scale", "simulation time per chemical time", ""),
    ("chi_10_m", "product valley offset", "m"),
    ("chi_20_m", "reactant valley offset", "m"),
    ("length_scale_reactant_m_per_m", "Q per q along the reactant channel", "m/m"),
)


def register(subparsers) -> None:
    parser = subparsers.add_parser("design", help="waveguide parameters for the cold-atom experiment")
    parser.add_argument("--target-frequency", default=None,
                        help="solve l for this transverse frequency instead, e.g. 5.657kHz")
    parser.set_defaults(handler=run)


def format_table(report: DesignReport) -> str:
    fields = report.to_json_dict()
    width = max(len(label) for _, label, _ in TABLE_ROWS)
    lines = [f"{label:<{width}}  {fields[key]:.6g} {unit}".rstrip() for key, label, unit in TABLE_ROWS]
    return "\n".join(lines)


@handle_command_errors("design")
def run(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    target = None
    if args.target_frequency is not None:
        try:
            target = parse_quantity(args.target_frequency, FREQUENCY)
        except ConfigurationError as e:
            raise UsageError(f"Bad --target-frequency: {e.message}")

    report = SimulationService.design(config, target_frequency=target)

    repository = RunRepository(output_directory(args, config))
    with repository.lock():
        path = repository.write_json("design_report.json", report.to_json_dict())
    logger.info(f"Wrote design report to {path}", extra={"path": path, "l": report.l})
    print(format_table(report))
    return 0
