import argparse

import numpy as np

from app.cli.commands.common import load_run_config, output_directory, parse_window
from app.core.constants import ANGSTROM
from app.core.logging_config import get_logger
from app.repositories.run_repository import RunRepository
from app.services.analysis import contour_raster
from app.services.frames import chem_to_sim, mass_factors
from app.services.simulation_service import SimulationService
from app.utils.errors import handle_command_errors

logger = get_logger(__name__)

DEFAULT_CHEM_WINDOW = (0.5 * ANGSTROM, 4.0 * ANGSTROM, 0.5 * ANGSTROM, 4.0 * ANGSTROM)


def register(subparsers) -> None:
    parser = subparsers.add_parser("surface", help="contour raster of V / E_zp for external plotting")
    parser.add_argument("--frame", choices=("chem", "sim"), default="chem")
    parser.add_argument("--window", nargs=4, metavar=("X_MIN", "X_MAX", "Y_MIN", "Y_MAX"),
                        help="unit-suffixed extents, e.g. 0.5angstrom 4angstrom 0.5angstrom 4angstrom")
    parser.add_argument("--resolution", type=int, default=201, help="points per axis")
    parser.add_argument("--clip", type=float, default=None, help="clip level in units of E_zp")
    parser.set_defaults(handler=run)


@handle_command_errors("surface")
def run(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    masses = config.reaction.masses
    scaling = SimulationService.scaling(config) if args.frame == "sim" else None

    if args.window:
        window = parse_window(args.window)
    elif args.frame == "chem":
        window = DEFAULT_CHEM_WINDOW
    else:
        # bounding box of the default chemical window in the simulation frame
        q1 = np.array(DEFAULT_CHEM_WINDOW[:2])[:, None]
        q2 = np.array(DEFAULT_CHEM_WINDOW[2:])[None, :]
        Q1, Q2 = chem_to_sim(q1, q2, mass_factors(masses), scaling)
        window = (float(Q1.min()), float(Q1.max()), float(Q2.min()), float(Q2.max()))

    raster = contour_raster(config.reaction.surface, window, args.resolution, args.frame,
                            masses=masses, scaling=scaling, clip_level=args.clip)

    repository = RunRepository(output_directory(args, config))
    with repository.lock():
        path = repository.write_raster(f"surface_{args.frame}.csv", raster)
    logger.info(f"Wrote {args.frame}-frame raster to {path}",
                extra={"path": path, "resolution": args.resolution, "clip_level": raster.clip_level})
    return 0
