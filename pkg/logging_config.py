#!/usr/bin/env python3
"""
Logging facility for flatmoduli.

Console output stays quiet by default while a DEBUG log of every run is written
to /tmp, so a failing verification can be triaged after the fact:
- component loggers under the 'flatmoduli.' namespace
- structured ALGORITHM_STEP / CHECK / PERFORMANCE lines
- timed operations with error context
"""

import logging
import os
import sys
import time
from datetime import datetime
from typing import Any, Dict, Optional

LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
}

NAMESPACE = 'flatmoduli'


def _format_details(details: Optional[Dict[str, Any]]) -> str:
    if not details:
        return ""
    return ', '.join(f"{k}={v}" for k, v in details.items())


class AppLogger:
    """Process-wide logging setup and component logger registry."""

    _loggers: Dict[str, logging.Logger] = {}
    _log_file: Optional[str] = None
    _console_level = logging.WARNING
    _initialized = False

    @classmethod
    def setup_logging(cls, console_level: str = "WARNING",
                      enable_file_logging: bool = True,
                      log_file: Optional[str] = None) -> Optional[str]:
        """
        Initialize the logging system once per process.

        Args:
            console_level: Console logging level (DEBUG, INFO, WARNING, ERROR)
            enable_file_logging: Whether to write the DEBUG run log
            log_file: Explicit log path (default: auto-generated in /tmp)

        Returns:
            Path to the log file, or None when file logging is off or failed
        """
        if cls._initialized:
            return cls._log_file

        cls._console_level = LEVELS.get(console_level.upper(), logging.WARNING)

        root = logging.getLogger()
        root.setLevel(logging.DEBUG)
        for handler in root.handlers[:]:
            root.removeHandler(handler)

        # Reports go to stdout, so the console log uses stderr.
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(cls._console_level)
        console.setFormatter(logging.Formatter(
            '%(asctime)s [%(levelname)8s] %(name)s: %(message)s', datefmt='%H:%M:%S'))
        root.addHandler(console)

        if enable_file_logging:
            if log_file:
                cls._log_file = log_file
            else:
                stamp = datetime.now().strftime('%Y%m%d_%H%M%S')
                cls._log_file = f"/tmp/{NAMESPACE}_debug_{stamp}_{os.getpid()}.log"
            try:
                file_handler = logging.FileHandler(cls._log_file, mode='w')
                file_handler.setLevel(logging.DEBUG)
                file_handler.setFormatter(logging.Formatter(
                    '%(asctime)s [%(levelname)8s] %(name)s:%(lineno)d: %(message)s',
                    datefmt='%Y-%m-%d %H:%M:%S'))
                root.addHandler(file_handler)
                startup = logging.getLogger(f'{NAMESPACE}.startup')
                startup.info(f"Logging initialized - File: {cls._log_file}")
                startup.info(f"Console level: {console_level}, File level: DEBUG")
            except OSError as e:
                logging.getLogger('logging_setup').warning(f"Could not set up file logging: {e}")
                cls._log_file = None

        cls._initialized = True
        return cls._log_file

    @classmethod
    def get_logger(cls, name: str) -> logging.Logger:
        """Get or create the logger for a component (e.g. 'torus', 'moduli')."""
        if name not in cls._loggers:
            cls._loggers[name] = logging.getLogger(f'{NAMESPACE}.{name}')
        return cls._loggers[name]

    @classmethod
    def log_algorithm_step(cls, logger_name: str, step: str, details: Dict[str, Any]):
        """Log a key algorithm step with structured details."""
        cls.get_logger(logger_name).debug(f"ALGORITHM_STEP: {step} | {_format_details(details)}")

    @classmethod
    def log_check(cls, logger_name: str, name: str, value: float, tolerance: float, passed: bool):
        """Log a residual check; failures are raised to WARNING."""
        logger = cls.get_logger(logger_name)
        level = logging.DEBUG if passed else logging.WARNING
        logger.log(level, f"CHECK: {name} value={value:.3e} tolerance={tolerance:.1e} passed={passed}")

    @classmethod
    def log_performance_metric(cls, logger_name: str, operation: str,
                               duration_ms: float, details: Optional[Dict[str, Any]] = None):
        """Log how long an operation took."""
        suffix = f" | {_format_details(details)}" if details else ""
        cls.get_logger(logger_name).info(f"PERFORMANCE: {operation} took {duration_ms:.2f}ms{suffix}")

    @classmethod
    def log_error_context(cls, logger_name: str, error: BaseException,
                          context: Dict[str, Any], operation: str):
        """Log an error together with the inputs that led to it."""
        logger = cls.get_logger(logger_name)
        logger.error(f"ERROR in {operation}: {type(error).__name__}: {error}")
        logger.error(f"ERROR_CONTEXT: {_format_details(context)}")
        logger.debug("ERROR_TRACEBACK:", exc_info=True)

    @classmethod
    def get_log_file_path(cls) -> Optional[str]:
        """Get the current log file path."""
        return cls._log_file


def create_component_logger(component_name: str) -> logging.Logger:
    """Convenience wrapper around AppLogger.get_logger."""
    return AppLogger.get_logger(component_name)


class LoggedOperation:
    """Context manager timing an operation and logging failures with context."""

    def __init__(self, logger_name: str, operation: str, details: Optional[Dict[str, Any]] = None):
        self.logger_name = logger_name
        self.operation = operation
        self.details = details or {}
        self.start_time = 0.0

    def __enter__(self):
        self.start_time = time.perf_counter()
        AppLogger.get_logger(self.logger_name).debug(f"Starting operation: {self.operation}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        duration_ms = (time.perf_counter() - self.start_time) * 1000
        if exc_type is None:
            AppLogger.log_performance_metric(self.logger_name, self.operation, duration_ms, self.details)
        else:
            AppLogger.log_error_context(self.logger_name, exc_val,
                                        {**self.details, 'duration_ms': round(duration_ms, 2)},
                                        self.operation)
        return False
