"""
Logging utilities for the obstacle SPDE toolkit.
"""

import logging
import logging.handlers
import time
from pathlib import Path
from typing import Optional

FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s - %(pathname)s:%(lineno)d'
CONSOLE_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

LOG_FILE_MAX_BYTES = 10 * 1024 * 1024
LOG_FILE_BACKUPS = 5


def setup_logger(name: str = 'ospde', level: str = 'INFO', log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the package logger.

    The level is applied on every call; handlers are installed once, a
    rotating file handler only when ``log_file`` is given.

    Args:
        name: Logger name
        level: Level name, unknown names fall back to INFO
        log_file: Path of the rotating log file

    Returns:
        The configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    if logger.handlers:
        return logger

    if log_file:
        try:
            Path(log_file).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                log_file, maxBytes=LOG_FILE_MAX_BYTES, backupCount=LOG_FILE_BACKUPS
            )
            file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
            logger.addHandler(file_handler)
        except OSError as e:
            logger.warning(f'Failed to set up file logging: {e}')

    # stderr, so stdout carries only command results
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    logger.addHandler(console_handler)

    return logger


def log_error(logger: logging.Logger, error: Exception, stage: Optional[str] = None):
    """Log an error with its type and pipeline stage."""
    logger.error(
        f'Error: {error} - '
        f'Type: {type(error).__name__} - '
        f'Stage: {stage or "unknown"}'
    )


class StageTimer:
    """Context manager for logging pipeline stage timing and errors."""

    def __init__(self, logger: logging.Logger, stage: str):
        self.logger = logger
        self.stage = stage
        self.start_time = None
        self.duration = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        self.logger.info(f'Stage {self.stage} started')
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration = time.perf_counter() - self.start_time
        if exc_type:
            log_error(self.logger, exc_val, self.stage)
            self.logger.warning(f'Stage {self.stage} failed in {self.duration:.2f}s')
        else:
            self.logger.info(f'Stage {self.stage} completed in {self.duration:.2f}s')
