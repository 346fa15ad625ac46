import os
from functools import lru_cache
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings

from mmwave_nc.logging_config import DEFAULT_FORMAT
from mmwave_nc.types import LogLevel

"""
Shared process settings, read from the environment
"""


class Settings(BaseSettings):
    """Process settings from environment variables."""

    # Execution
    workers: int = Field(
        default=1, ge=1, alias="MMWAVE_NC_WORKERS", description="Worker processes for campaigns (1 runs in-process)"
    )
    output_dir: str = Field(default="results", alias="MMWAVE_NC_OUTPUT_DIR", description="Default output directory")
    cache_dir: Optional[str] = Field(
        default=None, alias="MMWAVE_NC_CACHE_DIR", description="Directory for the bound cache (unset disables it)"
    )

    # Logging configuration
    log_level: LogLevel = Field(default=LogLevel.INFO, alias="LOG_LEVEL", description="Logging level")
    log_format: str = Field(
        default=DEFAULT_FORMAT,
        alias="LOG_FORMAT",
        description="Log message format",
    )

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "extra": "ignore",
        "populate_by_name": True,
    }

    @field_validator("log_level", mode="before")
    @classmethod
    def log_level_any_case(cls, value):
        return LogLevel.parse(value)

    @classmethod
    def ensure_env_file(cls, env_path: str = ".env") -> bool:
        """Create .env file with defaults if it doesn't exist. Returns True if created."""
        if os.path.exists(env_path):
            return False

        # Generate .env content from field definitions
        env_content = "# mmWave NC Configuration\n"
        env_content += "# Auto-generated - modify as needed\n\n"
        env_content += "# Optional - uncomment and modify as needed\n"

        for field_name, field_info in cls.model_fields.items():
            alias = getattr(field_info, "alias", None) or field_name.upper()
            default = field_info.default
            description = getattr(field_info, "description", "")

            if default is None:
                default_str = ""
            elif isinstance(default, str):
                default_str = f'"{default}"' if " " in default else default
            else:
                default_str = str(default).lower() if isinstance(default, bool) else str(default)

            env_content += f"# {alias}={default_str}"
            if description:
                env_content += f"  # {description}"
            env_content += "\n"

        try:
            with open(env_path, "w", encoding="utf-8") as f:
                f.write(env_content)
            return True
        except OSError:
            return False


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
