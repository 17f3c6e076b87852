from functools import wraps
import traceback

from pydantic import ValidationError

from app.core.events import event_emitter
from app.core.logging_config import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_STORAGE = 4


class SimulationError(Exception):
    """Base exception for everything the simulator raises on purpose."""

    exit_code = EXIT_UNEXPECTED

    def __init__(self, message, details=None, original_exception=None):
        self.message = message
        self.details = details or {}
        self.original_exception = original_exception
        super().__init__(message)


class ConfigurationError(SimulationError):
    """Invalid configuration, inputs outside a type's domain, bad usage."""

    exit_code = EXIT_CONFIG


class DomainError(ConfigurationError):
    """Argument outside the mathematical domain of an operation."""


class ResolutionError(ConfigurationError):
    """Grid too coarse for the requested state."""


class UsageError(ConfigurationError):
    """Command-line usage error."""


class NumericalError(SimulationError):
    """Numerical failure: non-convergence, broken bookkeeping, singularities."""

    exit_code = EXIT_NUMERICAL


class RadicandError(NumericalError):
    """LEPS radicand significantly negative."""


class CuspError(NumericalError):
    """Derivative requested where the LEPS square root is not differentiable."""


class SaddleSearchError(NumericalError):
    """Newton search did not converge."""


class SaddleClassificationError(NumericalError):
    """Converged stationary point is not a first-order saddle."""


class BookkeepingError(NumericalError):
    """Norm plus absorbed probability drifted away from one."""


class FitConvergenceError(NumericalError):
    """Fit stopped without meeting its tolerances."""


class StorageError(SimulationError):
    """Run directory I/O failure."""

    exit_code = EXIT_STORAGE


class TruncationError(SimulationError):
    """Requested more vibrational states than the channel supports.

    Reported through logging and events, not raised out of the analysis.
    """


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(error, SimulationError):
        return error.exit_code
    if isinstance(error, ValidationError):
        return EXIT_CONFIG
    if isinstance(error, OSError):
        return EXIT_STORAGE
    return EXIT_UNEXPECTED


def describe_validation_error(error: ValidationError) -> str:
    """Flatten a pydantic error into 'block.field: message' fragments."""
    messages = []
    for item in error.errors():
        location = ".".join(str(loc) for loc in item["loc"])
        messages.append(f"{location}: {item['msg']}")
    return ", ".join(messages)


def handle_command_errors(operation_name):
    """
    Decorator turning command exceptions into exit codes.

    Args:
        operation_name: Name of the command being run (for logging and events)
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                result = func(*args, **kwargs)
                return EXIT_OK if result is None else result
            except ValidationError as e:
                message = describe_validation_error(e)
                logger.error(f"Validation error in {operation_name}: {message}",
                             extra={"operation": operation_name, "validation_errors": e.errors()})
                event_emitter.emit("command.failed", command=operation_name, error=message,
                                   exit_code=EXIT_CONFIG)
                return EXIT_CONFIG
            except SimulationError as e:
                logger.error(f"{type(e).__name__} in {operation_name}: {e.message}",
                             extra={"operation": operation_name, "details": e.details})
                event_emitter.emit("command.failed", command=operation_name, error=e.message,
                                   exit_code=e.exit_code)
                return e.exit_code
            except OSError as e:
                logger.error(f"I/O error in {operation_name}: {e}",
                             extra={"operation": operation_name, "traceback": traceback.format_exc()})
                event_emitter.emit("command.failed", command=operation_name, error=str(e),
                                   exit_code=EXIT_STORAGE)
                return EXIT_STORAGE
            except Exception as e:
                logger.exception(f"Unexpected error during {operation_name}")
                event_emitter.emit("command.failed", command=operation_name, error=str(e),
                                   exit_code=EXIT_UNEXPECTED)
                return EXIT_UNEXPECTED

        return wrapper
    return decorator
