from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings using Pydantic Settings."""

    # --- Output ---
    output_root: Path = Path("runs")  # Relative output dirs in configs resolve here
    log_level: str = "INFO"

    # --- Cache ---
    cache_dir: Path = Path(".cache") / "stratabc"
    cache_enabled: bool = True  # Memoize observed data and pilot runs
    cache_size_limit: int = 1024 * 1024 * 1024  # 1GB, LRU eviction

    # --- Numerical safeguards ---
    startup_retries: int = 100  # Attempts to find a valid initial state
    mad_floor: float = 1e-12  # Lower bound for squared-MAD scaling entries
    proposal_jitter: float = 1e-10  # Diagonal jitter added to adapted covariances
    adapt_period: int = 500  # Iterations between proposal covariance refreshes
    max_reactions: int = 1_000_000  # Gillespie safety cap in t_max mode

    # --- Batch mode ---
    batch_workers: Optional[int] = None  # None lets the pool pick cpu_count()

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="STRATABC_",  # e.g. STRATABC_OUTPUT_ROOT=/scratch/runs
        extra="ignore",
    )


@lru_cache
def get_settings() -> Settings:
    """
    Returns a cached instance of Settings.
    The .env file and environment are read once per process; tests that
    change the environment call get_settings.cache_clear().
    """
    return Settings()
