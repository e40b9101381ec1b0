from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", extra="ignore", populate_by_name=True)

    # API settings
    API_V1_STR: str = "/v1"
    PROJECT_NAME: str = "Flowcoupling"
    VERSION: str = "0.1.0"
    ENV: str = Field(default="dev", alias="ENV")
    DEBUG: bool = Field(default=False, alias="DEBUG")

    # Logging
    LOG_LEVEL: str = Field(default="INFO", alias="LOG_LEVEL")
    LOG_FILE: str = Field(default="", alias="LOG_FILE", description="empty keeps logs on the console")

    # Desk-scale guards
    ORACLE_MAX_VERTICES: int = Field(default=24, alias="ORACLE_MAX_VERTICES")
    LATTICE_MAX_DIMENSION: int = Field(default=4, alias="LATTICE_MAX_DIMENSION")
    TRUNCATION_MAX_LEVEL: int = Field(default=64, alias="TRUNCATION_MAX_LEVEL")
    MAX_BOUNDARY_DEGREE: int = Field(default=64, alias="MAX_BOUNDARY_DEGREE")

    # Randomized probes and searches
    DEFAULT_SEED: int = Field(default=0, alias="DEFAULT_SEED")
    HOLLEY_SEARCH_BUDGET: int = Field(default=64, alias="HOLLEY_SEARCH_BUDGET")
    LATTICE_PROBE_COUNT: int = Field(default=30, alias="LATTICE_PROBE_COUNT")

    # Internal invariant checks
    DRIFT_BOUND_FACTOR: int = Field(default=6, alias="DRIFT_BOUND_FACTOR")
    LEDGER_STRICT_CHECKS: bool = Field(default=True, alias="LEDGER_STRICT_CHECKS")


def get_settings() -> Settings:
    """Get the global settings instance."""
    if not hasattr(get_settings, "_instance"):
        get_settings._instance = Settings()
    return get_settings._instance


settings = get_settings()
