import os
from pathlib import Path
from typing import Optional
from pydantic_settings import BaseSettings
from dotenv import load_dotenv
from pydantic import Field

# Load environment variables
load_dotenv()

class Settings(BaseSettings):
    # Application Configuration
    APP_ENV: str = "development"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[Path] = None

    # Data Storage
    DATA_DIR: Path = Path("./data")
    OUTPUT_DIR: Path = Path("./output")

    # Audio
    EXPECTED_SAMPLE_RATE: int = Field(default=16000, gt=0)

    # Parallelism across independent input files
    NCTF_NUM_THREADS: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)

    DEFAULT_SEED: int = 0

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"

# Create global settings instance
settings = Settings()
