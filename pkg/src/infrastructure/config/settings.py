from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class FrapSettings(BaseSettings):
    # Every field can be overridden by an environment variable of the same name,
    # e.g. `export FRAP_SEED=7` pins the seed of every CLI run.

    FRAP_SEED: Optional[int] = None
    FRAP_LOG_LEVEL: str = "INFO"
    FRAP_WORKERS: int = 4  # threads used to fan out verify/compare seeds
    FRAP_ORACLE_MAX_ITERATIONS: int = 10**6
    # None means the manifest shipped next to this module
    FRAP_VERIFY_MANIFEST: Optional[str] = None

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")


@lru_cache()
def get_settings() -> FrapSettings:
    """
    Returns the process settings.
    They are read from the environment or a .env file once and cached.
    """
    return FrapSettings()
