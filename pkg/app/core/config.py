import os
from typing import List
from dotenv import load_dotenv

from app.core.errors import ConfigError

# Load environment variables from .env file
load_dotenv()


class Settings:
    """Configuration class for the MEMS Quenching Lab"""

    # Basic settings
    PROJECT_NAME: str = "MEMS Quenching Lab"
    VERSION: str = "1.0.0"
    DESCRIPTION: str = "Pull-in voltages, quenching times and quenching asymptotics for MEMS with fringing field"

    # Discretization defaults (N=200, dt=6e-6, stop threshold 1e-10)
    GRID_SIZE: int = int(os.getenv("GRID_SIZE", "200"))
    TIME_STEP: float = float(os.getenv("TIME_STEP", "6e-6"))
    STOP_TOL: float = float(os.getenv("STOP_TOL", "1e-10"))
    MAX_STEPS: int = int(os.getenv("MAX_STEPS", "50000000"))

    # Shooting defaults
    ALPHA_GRID_SIZE: int = int(os.getenv("ALPHA_GRID_SIZE", "48"))

    # Sweep settings
    WORKERS: int = int(os.getenv("WORKERS", str(os.cpu_count() or 1)))

    # Output settings
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "results")
    FLOAT_DIGITS: int = int(os.getenv("FLOAT_DIGITS", "9"))

    # Logging settings
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_DIR: str = os.getenv("LOG_DIR", "logs")

    # Snapshot times used when an experiment file gives none
    DEFAULT_SNAPSHOT_TIMES: List[float] = [0.0]

    def validate(self):
        """Validate critical settings"""
        errors = []
        if self.GRID_SIZE < 4:
            errors.append(f"GRID_SIZE must be at least 4, got {self.GRID_SIZE}")
        if self.TIME_STEP <= 0:
            errors.append(f"TIME_STEP must be positive, got {self.TIME_STEP}")
        if not 0 < self.STOP_TOL <= 1e-6:
            errors.append(f"STOP_TOL must lie in (0, 1e-6], got {self.STOP_TOL}")
        if self.MAX_STEPS < 1:
            errors.append(f"MAX_STEPS must be positive, got {self.MAX_STEPS}")
        if self.WORKERS < 1:
            errors.append(f"WORKERS must be positive, got {self.WORKERS}")
        if self.FLOAT_DIGITS < 1:
            errors.append(f"FLOAT_DIGITS must be positive, got {self.FLOAT_DIGITS}")
        if errors:
            raise ConfigError("; ".join(errors))


# Create settings instance
settings = Settings()
