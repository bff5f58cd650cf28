"""
quapichain configuration: process-level settings from environment variables / .env file.

Run-specific physics (models, baths, step sizes) lives in the JSON run config
parsed by :mod:`quapichain.domain.parsing`; this module only holds knobs that
belong to the process (threads, logging, default output locations, guards).

Usage:
    from quapichain.config import settings

    workers = settings.quapichain_threads
"""

from functools import lru_cache
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings resolved from environment variables.

    Command-line flags take precedence over these values; they exist so batch
    schedulers can set defaults once per environment.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ------------------------------------------------------------------
    # Runtime
    # ------------------------------------------------------------------
    quapichain_log_level: str = Field(
        default="INFO",
        description="Root log level used by the CLI (DEBUG, INFO, WARNING, ...).",
    )
    quapichain_threads: int = Field(
        default=1,
        ge=1,
        description=(
            "Worker threads for per-site work: eta-cache warm-up and "
            "influence-path advancement within a step."
        ),
    )

    # ------------------------------------------------------------------
    # Artifacts
    # ------------------------------------------------------------------
    quapichain_out_dir: Path = Field(
        default=Path("runs"),
        description="Default output directory when --out is not given.",
    )
    quapichain_snapshot_every: int = Field(
        default=0,
        ge=0,
        description=(
            "Write a snapshot every N steps when --checkpoint is given. "
            "0 writes only the final snapshot."
        ),
    )

    # ------------------------------------------------------------------
    # Brute-force oracle guards
    # ------------------------------------------------------------------
    quapichain_brute_max_sites: int = Field(
        default=2,
        ge=1,
        description="Largest chain length accepted by the brute-force oracle.",
    )
    quapichain_brute_max_steps: int = Field(
        default=3,
        ge=1,
        description="Largest step count accepted by the brute-force oracle.",
    )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the cached ``Settings`` instance.

    Call ``get_settings.cache_clear()`` in tests to reload.
    """
    return Settings()


#: Module-level convenience alias: ``from quapichain.config import settings``.
settings: Settings = get_settings()
