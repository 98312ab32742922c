"""Whole toolkit configuration. Configuration uses pydantic BaseSettings.
Check https://docs.pydantic.dev/1.10/usage/settings/"""
from typing import Literal, Optional

from pydantic import BaseModel, BaseSettings, validator, Field

from wetsim.constants import DEFAULT_CHUNK_COUNT


class LoggingSettings(BaseModel):
    """Logging configuration model"""
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    """root level for every named logger"""

    @validator("level", pre=True)
    def cleanup_level(cls, level):
        return str(level).replace("\n", "").replace("\r", "").upper()


class Sentry(BaseModel):
    """Sentry configuration model"""
    dsn: Optional[str] = None
    """sentry dsn"""

    @validator("dsn")
    def cleanup_dsn(cls, dsn):
        if dsn:
            return dsn.replace("\n", "").replace("\r", "")


class SimulationDefaults(BaseModel):
    """Defaults that every command falls back to when the run config omits them"""
    threads: int = Field(1, ge=1)
    """worker threads for replica-parallel execution"""
    chunks: int = Field(DEFAULT_CHUNK_COUNT, ge=1)
    """number of independently seeded replica chunks (never derived from threads)"""
    out_dir: str = "out"
    """artifact directory"""

    @validator("out_dir")
    def cleanup_out_dir(cls, out_dir):
        return out_dir.replace("\n", "").replace("\r", "")


class Settings(BaseSettings):
    """Base settings class"""
    logging: LoggingSettings = LoggingSettings()
    sentry: Optional[Sentry] = None
    defaults: SimulationDefaults = SimulationDefaults()
    environment: Literal['development', 'testing', 'production'] = 'development'

    class Config:
        """configuration for whole settings"""
        env_prefix = 'WETSIM_'
        env_nested_delimiter = '__'
        """
        environment variable delimiter
        Description: nested settings are filled from variables like WETSIM_LOGGING__LEVEL, where '__'
        combines the settings module Logging with its parameter Level.
        """
        case_sensitive = False
        """
        Sets case insensitive for pydantic environment variables checker.
        """


settings = Settings()
