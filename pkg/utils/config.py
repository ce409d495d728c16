"""
Configuration management for the simulator.
Centralizes environment variable loading for logging, output and fan-out settings.
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Config:
    """Configuration class for process-wide settings."""

    # Output
    OUTPUT_DIR: str = os.getenv('PPG_OUTPUT_DIR', 'outputs')

    # Execution
    MAX_WORKERS: int = int(os.getenv('PPG_MAX_WORKERS', '4'))
    DEFAULT_SEED: int = int(os.getenv('PPG_DEFAULT_SEED', '1'))

    # Debug and Logging
    DEBUG: bool = os.getenv('PPG_DEBUG', 'false').lower() == 'true'
    LOG_LEVEL: str = os.getenv('PPG_LOG_LEVEL', 'INFO').upper()

    @classmethod
    def validate(cls) -> bool:
        """Validate that the configuration is usable."""
        if cls.MAX_WORKERS < 1:
            raise ValueError("PPG_MAX_WORKERS must be a positive integer")
        if cls.LOG_LEVEL not in _LOG_LEVELS:
            raise ValueError(f"PPG_LOG_LEVEL must be one of {', '.join(_LOG_LEVELS)}")
        return True

    @classmethod
    def effective_log_level(cls) -> str:
        """Log level after applying the debug switch."""
        return 'DEBUG' if cls.DEBUG else cls.LOG_LEVEL


# Initialize and validate configuration on import
config = Config()
config.validate()
