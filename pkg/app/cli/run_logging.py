import argparse
import time
import uuid
from typing import Callable

from app.core.events import event_emitter
from app.core.logging_config import get_logger, set_run_id

logger = get_logger(__name__)


def run_command(name: str, handler: Callable[[argparse.Namespace], int], args: argparse.Namespace) -> int:
    """Run one CLI command under a fresh run id, logging its start, outcome and timing."""
    set_run_id(uuid.uuid4().hex[:12])
    start_time = time.time()

    out_dir = getattr(args, "out", None)
    logger.info(
        f"Command started: {name}",
        extra={
            "command": name,
            "config": getattr(args, "config", None),
            "out_dir": out_dir,
            "threads": getattr(args, "threads", None),
            "seed": getattr(args, "seed", None),
        }
    )
    event_emitter.emit("run.started", command=name, out_dir=out_dir)

    try:
        exit_code = handler(args)
    except Exception as e:
        duration_ms = round((time.time() - start_time) * 1000, 2)
        logger.error(
            f"Command crashed: {name}",
            exc_info=e,
            extra={"command": name, "error": str(e), "duration_ms": duration_ms}
        )
        raise

    duration_ms = round((time.time() - start_time) * 1000, 2)
    logger.info(
        f"Command completed: {name}",
        extra={"command": name, "exit_code": exit_code, "duration_ms": duration_ms}
    )
    event_emitter.emit("run.completed", command=name, exit_code=exit_code, duration_ms=duration_ms)
    return exit_code
