"""Environment-driven runtime settings."""

import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, Field


class LabSettings(BaseModel):
    """Process-wide settings for the laboratory."""
    out_dir: Path = Path("out")
    log_level: str = "INFO"
    max_workers: int = Field(default=1, ge=1)


def load_settings() -> LabSettings:
    """Load settings from the environment, honouring a local .env file."""
    load_dotenv()
    return LabSettings(
        out_dir=Path(os.getenv("RELAXLAB_OUT_DIR", "out")),
        log_level=os.getenv("RELAXLAB_LOG_LEVEL", "INFO").upper(),
        max_workers=int(os.getenv("RELAXLAB_MAX_WORKERS", "1")),
    )
