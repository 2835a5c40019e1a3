import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel

# Ensure environment variables from .env are loaded if present
load_dotenv()

ENV_PREFIX = "DASSIM_"


class Settings(BaseModel):
    # Application
    app_name: str = "dassim"
    app_version: str = "0.3.0"
    log_level: str = "INFO"

    # Resource budgets
    waveform_memory_budget_mb: int = 2048
    campaign_sample_budget: int = 100_000_000
    campaign_max_runtime_s: Optional[float] = None
    default_threads: Optional[int] = None

    # Estimation
    fade_threshold: float = 1e-6
    snr_cap_db: float = 120.0
    stdv_floor: float = 1e-6

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings, letting DASSIM_<FIELD> environment variables override defaults."""
        overrides: Dict[str, Any] = {}
        for name in cls.model_fields:
            raw = os.getenv(ENV_PREFIX + name.upper())
            if raw is not None and raw != "":
                overrides[name] = raw
        return cls(**overrides)


settings = Settings.from_env()
