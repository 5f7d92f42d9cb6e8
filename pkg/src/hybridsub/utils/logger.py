"""Logging configuration for hybridsub."""

import logging
import os
from datetime import datetime
from typing import Optional

LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}


class LoggerSetup:
    """Configure and manage application logging."""

    _instance: Optional[logging.Logger] = None

    @classmethod
    def get_logger(cls, name: str = "hybridsub") -> logging.Logger:
        """Get or create a logger instance."""
        if cls._instance is None:
            cls._instance = cls._setup_logger(name)
        return cls._instance

    @staticmethod
    def console_level() -> int:
        """Console verbosity from the HSL_LOG environment variable."""
        return LEVELS.get(os.environ.get("HSL_LOG", "WARNING").strip().upper(), logging.WARNING)

    @classmethod
    def set_level(cls, level: str) -> None:
        """Change the console verbosity at runtime (``--verbose`` and friends)."""
        numeric = LEVELS.get(level.upper(), logging.WARNING)
        for handler in cls.get_logger().handlers:
            if not isinstance(handler, logging.FileHandler):
                handler.setLevel(numeric)

    @staticmethod
    def _setup_logger(name: str) -> logging.Logger:
        """Set up the logger with console and optional file handlers."""
        logger = logging.getLogger(name)
        logger.setLevel(logging.DEBUG)
        logger.propagate = False

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

        console_handler = logging.StreamHandler()
        console_handler.setLevel(LoggerSetup.console_level())
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        # File logging only when HSL_LOG_DIR is set
        log_dir = os.environ.get("HSL_LOG_DIR")
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
            log_file = os.path.join(log_dir, f"hybridsub_{datetime.now().strftime('%Y%m%d')}.log")
            file_handler = logging.FileHandler(log_file)
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        return logger

# Global logger instance
logger = LoggerSetup.get_logger()
