"""
Logging configuration for erpbench.
"""

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional, Union

DEFAULT_LOGGER_NAME = "erpbench"

THIRD_PARTY_LOGGERS = ('matplotlib', 'numba', 'sklearn', 'PIL')


def parse_level(level: Union[int, str]) -> int:
    """Numeric level from a level name or number ("debug", "INFO", 10)."""
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level).upper())
    return value if isinstance(value, int) else logging.INFO


def setup_logger(
    name: str = DEFAULT_LOGGER_NAME,
    level: Union[int, str] = logging.INFO,
    log_file: Optional[str] = None,
    log_dir: Optional[str] = "./logs",
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
    console_output: bool = True
) -> logging.Logger:
    """
    Set up a logger with a console handler and a rotating file handler.

    Args:
        name: Logger name
        level: Console level (name or number)
        log_file: Log file name (default: <name>.log)
        log_dir: Directory for log files (None disables the file handler)
        max_bytes: Maximum size of log file before rotation
        backup_count: Number of backup files to keep
        console_output: Whether to log to stdout

    Returns:
        Configured logger instance
    """
    level = parse_level(level)
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG if log_dir else level)

    # Avoid adding handlers multiple times
    if logger.handlers:
        return logger

    detailed_formatter = logging.Formatter(
        fmt='%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(lineno)d - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    simple_formatter = logging.Formatter(
        fmt='%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%H:%M:%S'
    )

    if console_output:
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(level)
        console_handler.setFormatter(simple_formatter)
        logger.addHandler(console_handler)

    file_path = None
    if log_dir:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)
        file_path = log_path / (log_file or f"{name}.log")

        file_handler = RotatingFileHandler(
            filename=str(file_path),
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(logging.DEBUG)  # Log everything to file
        file_handler.setFormatter(detailed_formatter)
        logger.addHandler(file_handler)

    logger.debug("=" * 80)
    logger.debug(f"Logger '{name}' initialized (level {logging.getLevelName(level)}, file {file_path})")
    logger.debug("=" * 80)

    return logger


def attach_package_loggers(target: logging.Logger, packages=('core', 'patchlab', 'config', '__main__')) -> None:
    """Route the package module loggers (``core.*``, ``patchlab.*``) to ``target``'s handlers."""
    for package in packages:
        package_logger = logging.getLogger(package)
        package_logger.setLevel(target.level)
        for handler in target.handlers:
            if handler not in package_logger.handlers:
                package_logger.addHandler(handler)
        package_logger.propagate = False


def configure_third_party_loggers(level: int = logging.WARNING) -> None:
    """
    Configure logging levels for third-party libraries.

    Args:
        level: Logging level for third-party libraries
    """
    for lib in THIRD_PARTY_LOGGERS:
        logging.getLogger(lib).setLevel(level)
