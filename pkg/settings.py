"""
Environment configuration for the SOGA graph adapter.

Provides:
- Loading of a local .env file via python-dotenv
- Typed getters for every SOGA_* environment variable
- ConfigError, raised for invalid configuration values or files
"""

import logging
import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.3.0"

DEFAULT_SEEDS = (1, 3, 5, 7, 9)


class ConfigError(ValueError):
    """Exception raised for invalid configuration values."""
    pass


# ────────────────────────────────────────────────────────────────────────────────
# Environment getters
# ────────────────────────────────────────────────────────────────────────────────

def get_jobs() -> int:
    """
    Number of concurrent benchmark cells (SOGA_JOBS, default 1).

    Raises:
        ConfigError: If the variable is not a positive integer.
    """
    raw = os.getenv("SOGA_JOBS", "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise ConfigError(f"SOGA_JOBS must be an integer, got {raw!r}")
    if jobs < 1:
        raise ConfigError(f"SOGA_JOBS must be >= 1, got {jobs}")
    return jobs


def get_output_dir() -> str:
    """Default output root for run artifacts (SOGA_OUTPUT_DIR, default 'runs')."""
    return os.getenv("SOGA_OUTPUT_DIR", "runs")


def progress_enabled() -> bool:
    """Whether tqdm progress bars may be shown (SOGA_PROGRESS, default on)."""
    return os.getenv("SOGA_PROGRESS", "1").strip().lower() not in {"0", "false", "no", "off"}


def get_settings_info() -> dict:
    """
    Get the effective environment settings (for debugging and run manifests).

    Returns:
        Dictionary of setting names to values.
    """
    return {
        "jobs": os.getenv("SOGA_JOBS", "1"),
        "output_dir": get_output_dir(),
        "progress": progress_enabled(),
        "database_url": os.getenv("SOGA_DATABASE_URL", "sqlite:///soga_runs.db"),
    }
