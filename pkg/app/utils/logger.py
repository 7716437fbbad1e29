import logging
import logging.handlers
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional
import json

from app.core.config import settings


class RunContextFormatter(logging.Formatter):
    """Level-colored lines; a record logged with ``extra={"run": label}`` carries the label in brackets"""

    LEVEL_COLORS = {
        logging.DEBUG: "\x1b[38;21m",
        logging.INFO: "\x1b[38;5;39m",
        logging.WARNING: "\x1b[38;5;226m",
        logging.ERROR: "\x1b[38;5;196m",
        logging.CRITICAL: "\x1b[31;1m",
    }
    RESET = "\x1b[0m"

    def __init__(self, fmt: str, use_color: bool = False):
        super().__init__(fmt)
        self.use_color = use_color

    def format(self, record):
        label = getattr(record, "run", None)
        record.run_tag = f" [{label}]" if label else ""
        line = super().format(record)
        if not self.use_color:
            return line
        return self.LEVEL_COLORS.get(record.levelno, "") + line + self.RESET


def _logs_dir() -> Path:
    logs_dir = Path(settings.LOG_DIR)
    logs_dir.mkdir(parents=True, exist_ok=True)
    return logs_dir


def setup_logger(name: str = "app") -> logging.Logger:
    """Setup the package logger with console and rotating file handlers.

    Service modules log through ``logging.getLogger(__name__)`` and inherit
    these handlers, since their names live under ``app``.
    """
    logger = logging.getLogger(name)
    logger.setLevel(settings.LOG_LEVEL)

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    logs_dir = _logs_dir()

    # Console handler with colors; stderr keeps stdout free for tables
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(settings.LOG_LEVEL)
    console_format = "%(asctime)s - %(name)s - %(levelname)s%(run_tag)s - %(message)s"
    console_handler.setFormatter(RunContextFormatter(console_format, use_color=sys.stderr.isatty()))

    # File handler for all logs
    file_handler = logging.handlers.RotatingFileHandler(
        logs_dir / "mems_lab.log",
        maxBytes=10*1024*1024,  # 10MB
        backupCount=5
    )
    file_handler.setLevel(logging.INFO)
    file_format = "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d%(run_tag)s - %(message)s"
    file_formatter = RunContextFormatter(file_format)
    file_handler.setFormatter(file_formatter)

    # Error file handler
    error_handler = logging.handlers.RotatingFileHandler(
        logs_dir / "mems_lab_errors.log",
        maxBytes=10*1024*1024,  # 10MB
        backupCount=5
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(file_formatter)

    logger.addHandler(console_handler)
    logger.addHandler(file_handler)
    logger.addHandler(error_handler)

    return logger


def get_run_logger() -> logging.Logger:
    """Get logger that appends one JSON line per completed run"""
    logger = logging.getLogger("runs")
    logger.setLevel(logging.INFO)
    logger.propagate = False

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    run_handler = logging.handlers.RotatingFileHandler(
        _logs_dir() / "runs.log",
        maxBytes=10*1024*1024,  # 10MB
        backupCount=5
    )
    run_handler.setLevel(logging.INFO)
    run_handler.setFormatter(RunContextFormatter("%(asctime)s%(run_tag)s - %(message)s"))

    logger.addHandler(run_handler)
    return logger


def log_run_record(record: dict, label: Optional[str] = None):
    """Log a completed evolution run"""
    get_run_logger().info(json.dumps(record, sort_keys=True, default=str), extra={"run": label})


def log_command_startup(command: str, config_path: Optional[str], workers: int):
    """Log command startup information"""
    startup_info = {
        "event": "command_startup",
        "timestamp": datetime.now().isoformat(),
        "command": command,
        "config": config_path,
        "workers": workers,
        "python_version": sys.version.split()[0],
        "pid": os.getpid()
    }
    logger.info(f"Starting {command}: {json.dumps(startup_info)}")


def log_command_finished(command: str, exit_code: int, wall_clock: float):
    """Log command completion information"""
    finish_info = {
        "event": "command_finished",
        "timestamp": datetime.now().isoformat(),
        "command": command,
        "exit_code": exit_code,
        "wall_clock_s": round(wall_clock, 3),
        "pid": os.getpid()
    }
    if exit_code == 0:
        logger.info(f"Finished {command}: {json.dumps(finish_info)}")
    else:
        logger.error(f"Failed {command}: {json.dumps(finish_info)}")


def log_configuration_validation(success: bool, errors: Optional[list] = None):
    """Log configuration validation status"""
    if success:
        logger.info("Configuration validated successfully")
    else:
        logger.error(f"Configuration validation failed: {errors}")


# Create main logger instance
logger = setup_logger()
