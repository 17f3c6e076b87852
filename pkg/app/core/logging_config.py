import logging
import os
import sys
import json
from logging.handlers import RotatingFileHandler
import uuid
from typing import Optional, Dict, Any
from contextvars import ContextVar

# Context variable to store the current run ID
run_id_var: ContextVar[str] = ContextVar('run_id', default='')

_STANDARD_ATTRS = {
    'args', 'asctime', 'created', 'exc_info', 'exc_text', 'filename',
    'funcName', 'id', 'levelname', 'levelno', 'lineno',
    'module', 'msecs', 'message', 'msg', 'name', 'pathname',
    'process', 'processName', 'relativeCreated', 'stack_info',
    'thread', 'threadName', 'run_id', 'duration_ms', 'taskName',
}


class RunIDFilter(logging.Filter):
    """Filter that adds run_id to log records."""

    def filter(self, record):
        record.run_id = run_id_var.get()
        return True


class JSONFormatter(logging.Formatter):
    """Format logs as JSON for better parsing."""

    def format(self, record):
        log_data = {
            'timestamp': self.formatTime(record, self.datefmt),
            'level': record.levelname,
            'name': record.name,
            'message': record.getMessage(),
            'run_id': getattr(record, 'run_id', ''),
        }

        if hasattr(record, 'duration_ms'):
            log_data['duration_ms'] = record.duration_ms

        if record.exc_info:
            log_data['exception'] = self.formatException(record.exc_info)

        for key, value in record.__dict__.items():
            if key not in _STANDARD_ATTRS:
                log_data[key] = value

        # numpy scalars and arrays end up in extras; fall back to str
        return json.dumps(log_data, default=str)


def get_run_id() -> str:
    """Get the current run ID or generate a new one."""
    run_id = run_id_var.get()
    if not run_id:
        run_id = uuid.uuid4().hex[:12]
        run_id_var.set(run_id)
    return run_id


def set_run_id(run_id: str) -> None:
    """Set the run ID for the current context."""
    run_id_var.set(run_id)


def setup_logging(app_name="reactsim", log_level=None, log_dir=None, console_level=None):
    """
    Configure application logging with console and file handlers.

    Args:
        app_name: Name of the application for the log file names
        log_level: Optional override for log level (defaults to LOG_LEVEL)
        log_dir: Directory for the JSON log files (defaults to LOG_DIR)
        console_level: Optional separate level for the console handler
    """
    from app.core import settings

    if log_level is None:
        log_level = settings.LOG_LEVEL
    if log_dir is None:
        log_dir = settings.LOG_DIR

    numeric_level = getattr(logging, log_level.upper(), logging.WARNING)
    console_numeric = numeric_level
    if console_level is not None:
        console_numeric = getattr(logging, console_level.upper(), numeric_level)

    root_logger = logging.getLogger()
    root_logger.setLevel(min(numeric_level, console_numeric))

    # Remove existing handlers to avoid duplication
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    run_id_filter = RunIDFilter()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(console_numeric)
    console_handler.addFilter(run_id_filter)
    console_handler.setFormatter(logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - [%(run_id)s] - %(message)s'
    ))
    root_logger.addHandler(console_handler)

    os.makedirs(log_dir, exist_ok=True)

    file_handler = RotatingFileHandler(
        os.path.join(log_dir, f"{app_name}.log"),
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5
    )
    file_handler.setLevel(numeric_level)
    file_handler.addFilter(run_id_filter)
    file_handler.setFormatter(JSONFormatter())
    root_logger.addHandler(file_handler)

    error_file_handler = RotatingFileHandler(
        os.path.join(log_dir, f"{app_name}_errors.log"),
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5
    )
    error_file_handler.setLevel(logging.ERROR)
    error_file_handler.addFilter(run_id_filter)
    error_file_handler.setFormatter(JSONFormatter())
    root_logger.addHandler(error_file_handler)

    logging.getLogger(__name__).debug(f"Logging configured with level: {log_level}")

    return root_logger


def get_logger(name):
    """
    Get a logger with the given name.

    Args:
        name: The name of the logger (typically __name__)
    """
    return logging.getLogger(name)


def log_operation_start(logger: logging.Logger, operation: str, **kwargs) -> None:
    """Log the start of an operation with context information."""
    logger.info(f"Operation started: {operation}", extra=kwargs)


def log_operation_success(logger: logging.Logger, operation: str, duration_ms: Optional[float] = None, **kwargs) -> None:
    """Log the successful completion of an operation with duration if available."""
    extra = kwargs.copy()
    if duration_ms is not None:
        extra['duration_ms'] = duration_ms
    logger.info(f"Operation completed successfully: {operation}", extra=extra)


def log_operation_failed(logger: logging.Logger, operation: str, error: Optional[Exception] = None, duration_ms: Optional[float] = None, **kwargs) -> None:
    """Log the failure of an operation with error details and duration if available."""
    extra = kwargs.copy()
    if duration_ms is not None:
        extra['duration_ms'] = duration_ms

    if error:
        logger.error(f"Operation failed: {operation} - {str(error)}", exc_info=error, extra=extra)
    else:
        logger.error(f"Operation failed: {operation}", extra=extra)


def log_storage_operation(logger: logging.Logger, operation: str, path: str, duration_ms: Optional[float] = None, **kwargs) -> None:
    """Log run-directory I/O with the target path and duration."""
    extra = kwargs.copy()
    extra['path'] = path
    if duration_ms is not None:
        extra['duration_ms'] = duration_ms

    logger.debug(f"Storage operation: {operation}", extra=extra)
