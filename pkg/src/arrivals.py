"""Seeded synthetic hourly arrival counts from a non-homogeneous Poisson process."""

import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Literal, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import config
from .models import Series, to_utc

logger = logging.getLogger(__name__)

HOURS_PER_YEAR = 8766.0  # 365.25 days
DAYS_PER_YEAR = 365.25

DEFAULT_DIURNAL = [
    0.62, 0.52, 0.45, 0.40, 0.37, 0.38, 0.50, 0.72,
    0.98, 1.18, 1.36, 1.45, 1.37, 1.33, 1.30, 1.28,
    1.27, 1.26, 1.24, 1.20, 1.10, 0.98, 0.85, 0.72,
]
DEFAULT_DAY_OF_WEEK = [1.06, 1.02, 1.00, 0.99, 0.99, 0.96, 0.98]


def _normalised(values: List[float], size: int, name: str) -> List[float]:
    if len(values) != size:
        raise ValueError(f"{name} must have {size} entries, got: {len(values)}")
    if any(not (v > 0 and math.isfinite(v)) for v in values):
        raise ValueError(f"{name} multipliers must be positive and finite")
    mean = sum(values) / size
    return [v / mean for v in values]


class ArrivalGenConfig(BaseModel):
    """Parameters of the synthetic arrival process (one `[arrivals]` TOML section)."""

    model_config = ConfigDict(extra="forbid")

    start: datetime = datetime(2014, 1, 1, tzinfo=timezone.utc)
    n_hours: int = Field(default=32136, ge=1)
    base_rate: float = Field(default=6.0, gt=0)
    trend_pct_per_year: float = 3.0
    diurnal: List[float] = Field(default_factory=lambda: list(DEFAULT_DIURNAL))
    day_of_week: List[float] = Field(default_factory=lambda: list(DEFAULT_DAY_OF_WEEK))
    annual_amplitude: float = Field(default=0.05, ge=0, lt=1)
    noise: Literal["poisson"] = "poisson"
    seed: int = config.DEFAULT_SEED

    @field_validator("start")
    @classmethod
    def _hourly_utc(cls, value: datetime) -> datetime:
        return to_utc(value).replace(minute=0, second=0, microsecond=0)

    @field_validator("diurnal")
    @classmethod
    def _diurnal_mean_one(cls, value: List[float]) -> List[float]:
        return _normalised(value, 24, "diurnal")

    @field_validator("day_of_week")
    @classmethod
    def _weekly_mean_one(cls, value: List[float]) -> List[float]:
        return _normalised(value, 7, "day_of_week")

    @field_validator("trend_pct_per_year")
    @classmethod
    def _trend_above_minus_100(cls, value: float) -> float:
        if not value > -100.0:
            raise ValueError(f"trend_pct_per_year must exceed -100, got: {value}")
        return value

    @property
    def peak_hour(self) -> int:
        return int(np.argmax(self.diurnal))


def load_arrival_config(path: Union[str, Path] = config.DEFAULT_ARRIVALS_CONFIG) -> ArrivalGenConfig:
    """Read an ArrivalGenConfig from the `[arrivals]` section of a TOML file.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: On malformed TOML or invalid fields
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Generator config not found: {path}")
    with open(path, "rb") as f:
        document = tomllib.load(f)
    if "arrivals" not in document:
        raise ValueError(f"{path}: missing [arrivals] section")
    return ArrivalGenConfig(**document["arrivals"])


def arrival_rates(gen_config: ArrivalGenConfig) -> np.ndarray:
    """Hourly Poisson intensities lambda(t) for the configured window."""
    timestamps = pd.date_range(start=gen_config.start, periods=gen_config.n_hours, freq=pd.Timedelta(hours=1))
    years = np.arange(gen_config.n_hours) / HOURS_PER_YEAR
    growth = (1.0 + gen_config.trend_pct_per_year / 100.0) ** years
    diurnal = np.asarray(gen_config.diurnal)[timestamps.hour.to_numpy()]
    weekly = np.asarray(gen_config.day_of_week)[timestamps.dayofweek.to_numpy()]
    annual = 1.0 + gen_config.annual_amplitude * np.sin(
        2.0 * np.pi * timestamps.dayofyear.to_numpy() / DAYS_PER_YEAR
    )
    return gen_config.base_rate * growth * diurnal * weekly * annual


def generate_arrivals(gen_config: ArrivalGenConfig) -> Series:
    """Draw hourly arrival counts (stored as reals); deterministic per seed."""
    rates = arrival_rates(gen_config)
    rng = np.random.default_rng(gen_config.seed)
    counts = rng.poisson(rates).astype(float)
    logger.info(
        f"Generated {gen_config.n_hours} hours of arrivals (seed {gen_config.seed}, "
        f"mean {counts.mean():.3f}/hour)"
    )
    return Series(gen_config.start, counts, label="arrivals")
