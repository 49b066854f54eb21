"""
Configuration management for SGPDE.
"""

import logging
from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        populate_by_name=True,
        extra="ignore",
    )

    # Logging
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")

    # Artifacts
    output_dir: Optional[str] = Field(default=None, alias="SGPDE_OUTPUT_DIR")
    debug_dump_matrices: bool = Field(default=False, alias="SGPDE_DEBUG_DUMP")

    # Assembly
    gram_chunk_rows: int = Field(default=512, ge=1, alias="SGPDE_GRAM_CHUNK_ROWS")

    # Diagnostics
    diagnose_max_psi: int = Field(default=20000, ge=1, alias="SGPDE_DIAGNOSE_MAX_PSI")

    # Batch runs
    batch_workers: int = Field(default=1, ge=1, alias="SGPDE_BATCH_WORKERS")


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Returns:
        Settings object loaded from environment
    """
    return Settings()


def setup_logging(settings: Settings) -> None:
    """
    Configure logging for the application.

    Args:
        settings: Settings object with log level
    """
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
