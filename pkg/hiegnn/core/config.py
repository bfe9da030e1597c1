"""
Application configuration management.
Loads process settings from environment variables and ships the
per-dataset default bundles.
"""

from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from environment variables or `.env`."""

    # Data and artifacts
    DATA_DIR: str = "data"
    OUTPUT_DIR: str = "runs"

    # Run registry; defaults to a SQLite file inside OUTPUT_DIR
    DATABASE_URL: Optional[str] = None

    # Logging
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Inference service
    API_HOST: str = "0.0.0.0"
    API_PORT: int = 8000
    CHECKPOINT_PATH: Optional[str] = None
    API_TOKEN: Optional[str] = None

    # CORS - can be comma-separated string or list
    CORS_ORIGINS: Union[str, List[str]] = "http://localhost:3000"

    ENVIRONMENT: str = "development"

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    @field_validator("CORS_ORIGINS", mode="before")
    @classmethod
    def parse_cors_origins(cls, v):
        """Parse CORS origins from comma-separated string or list."""
        if isinstance(v, str):
            return [origin.strip() for origin in v.split(",") if origin.strip()]
        return v

    @property
    def database_url(self) -> str:
        """Run-registry URL, falling back to `OUTPUT_DIR/registry.db`."""
        if self.DATABASE_URL:
            return self.DATABASE_URL
        return f"sqlite:///{Path(self.OUTPUT_DIR) / 'registry.db'}"

    @property
    def log_level(self) -> str:
        return "DEBUG" if self.DEBUG else self.LOG_LEVEL.upper()


class CorpusTargets(BaseModel):
    """Published statistics of a benchmark corpus."""

    docs: int
    train: int
    test: int
    words: int
    classes: int
    avg_length: float
    avg_sentences: float


class DatasetPreset(BaseModel):
    """Defaults shipped for one benchmark corpus."""

    name: str
    learning_rate: float
    split_mode: Literal["punct", "chunk"]
    targets: CorpusTargets


DATASET_PRESETS: Dict[str, DatasetPreset] = {
    "20ng": DatasetPreset(
        name="20ng",
        learning_rate=1e-3,
        split_mode="punct",
        targets=CorpusTargets(docs=18846, train=11314, test=7532, words=42757,
                              classes=20, avg_length=221.26, avg_sentences=4.89),
    ),
    "r8": DatasetPreset(
        name="r8",
        learning_rate=1e-3,
        split_mode="chunk",
        targets=CorpusTargets(docs=7674, train=5485, test=2189, words=7688,
                              classes=8, avg_length=65.72, avg_sentences=6.24),
    ),
    "r52": DatasetPreset(
        name="r52",
        learning_rate=1e-3,
        split_mode="chunk",
        targets=CorpusTargets(docs=9100, train=6532, test=2568, words=8892,
                              classes=52, avg_length=69.82, avg_sentences=6.29),
    ),
    "ohsumed": DatasetPreset(
        name="ohsumed",
        learning_rate=1e-3,
        split_mode="punct",
        targets=CorpusTargets(docs=7400, train=3357, test=4043, words=14157,
                              classes=23, avg_length=135.82, avg_sentences=9.02),
    ),
    "mr": DatasetPreset(
        name="mr",
        learning_rate=1e-4,
        split_mode="punct",
        targets=CorpusTargets(docs=10662, train=7108, test=3554, words=18764,
                              classes=2, avg_length=20.39, avg_sentences=1.19),
    ),
}


def get_preset(name: Optional[str]) -> Optional[DatasetPreset]:
    """Look up a dataset preset by case-insensitive name."""
    if name is None:
        return None
    return DATASET_PRESETS.get(name.lower())


# Create global settings instance
settings = Settings()
