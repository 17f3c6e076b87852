from typing import Dict, Any

from pyee import EventEmitter

from app.core.logging_config import get_logger

logger = get_logger(__name__)

event_emitter = EventEmitter()


@event_emitter.on('run.started')
def handle_run_started(command: str, out_dir: str = None):
    """Handle the start of a CLI command."""
    logger.info(f"Event: Run started: {command}", extra={"command": command, "out_dir": out_dir})


@event_emitter.on('run.completed')
def handle_run_completed(command: str, exit_code: int, duration_ms: float = None):
    """Handle the end of a CLI command."""
    logger.info(f"Event: Run completed: {command} (exit {exit_code})",
                extra={"command": command, "exit_code": exit_code, "duration_ms": duration_ms})


@event_emitter.on('propagation.snapshot')
def handle_snapshot(step: int, time: float, norm: float):
    """Handle a propagation snapshot."""
    logger.debug(f"Event: Snapshot at step {step}",
                 extra={"step": step, "sim_time": time, "norm": norm})


@event_emitter.on('propagation.completed')
def handle_propagation_completed(n_steps: int, norm: float, absorbed: Dict[str, float]):
    """Handle the end of a propagation."""
    logger.info(f"Event: Propagation completed after {n_steps} steps",
                extra={"n_steps": n_steps, "norm": norm, "absorbed": absorbed})


@event_emitter.on('saddle.converged')
def handle_saddle_converged(q1: float, q2: float, barrier: float, iterations: int):
    """Handle a converged saddle search."""
    logger.debug(f"Event: Saddle converged in {iterations} iterations",
                 extra={"q1": q1, "q2": q2, "barrier": barrier, "iterations": iterations})


@event_emitter.on('analysis.truncated')
def handle_truncation(channel: str, requested: int, available: int):
    """Handle a vibrational basis that had to be truncated."""
    logger.warning(f"Event: Vibrational basis truncated in {channel} channel: "
                   f"requested n_max={requested}, {available} bound states",
                   extra={"channel": channel, "requested": requested, "available": available})


@event_emitter.on('fit.evaluation')
def handle_fit_evaluation(evaluation: int, params: Dict[str, Any], objective: float):
    """Handle one objective evaluation."""
    logger.debug(f"Event: Fit evaluation {evaluation}: {objective:.3e}",
                 extra={"evaluation": evaluation, "params": params, "objective": objective})


@event_emitter.on('fit.penalty')
def handle_fit_penalty(params: Dict[str, Any], error: str):
    """Handle an objective evaluation that fell back to the penalty value."""
    logger.warning(f"Event: Fit penalty applied: {error}",
                   extra={"params": params, "error": error})


@event_emitter.on('fit.completed')
def handle_fit_completed(converged: bool, evaluations: int, objective: float):
    """Handle the end of a fit."""
    logger.info(f"Event: Fit completed (converged={converged})",
                extra={"converged": converged, "evaluations": evaluations, "objective": objective})


@event_emitter.on('command.failed')
def handle_command_failed(command: str, error: str, exit_code: int):
    """Handle a failed command."""
    logger.error(f"Event: Command {command} failed with exit code {exit_code}: {error}",
                 extra={"command": command, "error": error, "exit_code": exit_code})


@event_emitter.on('cap.reflection')
def handle_cap_reflection(velocity: float, reflection: float, transmission: float):
    """Handle absorbing strips that fail the plane-wave check."""
    logger.warning(f"Event: Absorbing strips reflect {reflection:.2e} and transmit {transmission:.2e} "
                   f"at {velocity:.3e} m/s",
                   extra={"velocity": velocity, "reflection": reflection, "transmission": transmission})
