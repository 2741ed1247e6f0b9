"""
Configuration settings for the knowbal toolkit.
"""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class KnowbalSettings(BaseSettings):
    """Runtime settings, overridable through KNOWBAL_* environment variables."""

    # Catalog / group cache
    CACHE_DIR: str = Field(default="./.knowbal-cache")
    OFFLINE: bool = Field(default=False)

    # Simulation
    SEED: int = Field(default=0, ge=0)
    TRIALS: int = Field(default=10000, ge=1)
    UPDATE_RULE: Literal["max-fidelity", "outcome-base"] = Field(default="max-fidelity")

    # Output
    OUTPUT_FORMAT: Literal["text", "json", "csv"] = Field(default="text")

    # Logging
    LOG_LEVEL: str = Field(default="WARNING")
    LOG_JSON: bool = Field(default=False)

    model_config = SettingsConfigDict(
        env_prefix="KNOWBAL_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )


def get_settings() -> KnowbalSettings:
    """Build a fresh settings object from the current environment."""
    return KnowbalSettings()


# Global settings instance
settings = get_settings()
