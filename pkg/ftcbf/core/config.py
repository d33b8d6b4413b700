import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ftcbf.core.errors import ConfigurationError

# Pull an optional .env into the process environment before Settings reads it.
load_dotenv()

LOG_LEVELS = ("error", "info", "debug")
BUNDLED_SCENARIO = Path(__file__).resolve().parents[2] / "scenarios" / "two_robot_patrol.json"


class Settings(BaseModel):
    """Process-wide settings, read from the environment."""

    model_config = ConfigDict(frozen=True)

    log_level: str = "info"
    qp_debug: bool = False
    output_root: Path = Path("runtime/runs")

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.strip().lower()
        if value not in LOG_LEVELS:
            raise ValueError(f"FTCBF_LOG must be one of {', '.join(LOG_LEVELS)}, got '{value}'")
        return value

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            log_level=os.getenv("FTCBF_LOG", "info"),
            qp_debug=os.getenv("FTCBF_QP_DEBUG", "0").lower() in ("1", "true", "yes"),
            output_root=Path(os.getenv("FTCBF_OUTPUT_ROOT", "runtime/runs")),
        )


class QpSettings(BaseModel):
    """Numeric constants of the min-norm solver."""

    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(default=10_000, gt=0)
    dual_tolerance: float = Field(default=1e-10, gt=0)
    divergence_norm: float = Field(default=1e12, gt=0)
    feasibility_tolerance: float = Field(default=1e-9, gt=0)
    debug: bool = False


def get_settings() -> Settings:
    try:
        return Settings.from_env()
    except ValueError as e:
        raise ConfigurationError(f"Invalid environment configuration: {e}") from e
