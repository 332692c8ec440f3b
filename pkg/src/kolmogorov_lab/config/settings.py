"""Process settings and derived artifact paths."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        populate_by_name=True,
    )

    lab_env: str = Field(default="LOCAL", alias="KOLMO_ENV")
    out_dir: Path = Field(default=Path("./artifacts"), alias="KOLMO_OUT_DIR")
    log_level: str = Field(default="INFO", alias="KOLMO_LOG_LEVEL")
    threads: int = Field(default=1, alias="KOLMO_THREADS", ge=1)
    seed: int = Field(default=20240601, alias="KOLMO_SEED", ge=0)
    kde_exact_limit: float = Field(default=5e7, alias="KOLMO_KDE_EXACT_LIMIT", gt=0)

    @field_validator("lab_env")
    @classmethod
    def validate_lab_env(cls, value: str) -> str:
        normalized = value.upper()
        if normalized not in {"LOCAL", "CI"}:
            raise ValueError("KOLMO_ENV must be LOCAL or CI")
        return normalized

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, value: str) -> str:
        normalized = value.upper()
        allowed = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if normalized not in allowed:
            raise ValueError(f"KOLMO_LOG_LEVEL must be one of {sorted(allowed)}")
        return normalized

    def validate_runtime(self) -> None:
        if self.threads > 256:
            raise ValueError("KOLMO_THREADS above 256 is not supported")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    settings = Settings()
    settings.validate_runtime()
    return settings
