"""Configuration settings for the arrival forecasting pipeline."""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Base paths
WORKSPACE_ROOT = Path(__file__).parent.parent
OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", WORKSPACE_ROOT / "output"))

# Output subdirectories (used when a command is run without --out)
DATA_DIR = OUTPUT_DIR / "data"
MODELS_DIR = OUTPUT_DIR / "models"
FORECASTS_DIR = OUTPUT_DIR / "forecasts"
REPORTS_DIR = OUTPUT_DIR / "reports"
CHARTS_DIR = OUTPUT_DIR / "charts"

# Shipped generator configurations
CONFIGS_DIR = WORKSPACE_ROOT / "configs"
DEFAULT_ARRIVALS_CONFIG = CONFIGS_DIR / "ed_default.toml"

# Reproducibility
DEFAULT_SEED = int(os.getenv("FORECAST_SEED", "42"))
WORKERS = int(os.getenv("FORECAST_WORKERS", "1"))

# Series ingestion
DEFAULT_STEP_SECONDS = 3600
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"
GAP_POLICIES = ("error", "zero_fill", "linear_interpolate")

# Hypothesis tests
ALPHA = 0.05
CORRELOGRAM_Z = 1.96

# Nelder-Mead defaults
OPTIMIZER_XATOL = 1e-8
OPTIMIZER_FATOL = 1e-8
OPTIMIZER_MAX_ITERATIONS = 5000

# Seasonal ARIMA likelihood
SARIMA_XATOL = 1e-6
SARIMA_FATOL = 1e-6
KALMAN_EXACT_STEPS = 336  # Covariance recursion steps before the steady-state tail takes over

# Candidate fits during order selection are ranked on the most recent values
# with looser tolerances; the winner is refitted on the whole series.
SELECTION_WINDOW = int(os.getenv("FORECAST_SELECTION_WINDOW", "2016"))  # 12 weeks of hours; 0 = all
SELECTION_XATOL = 1e-4
SELECTION_FATOL = 1e-3

# Seasonal ARIMA search bounds (stepwise default)
DEFAULT_MAX_P = 5
DEFAULT_MAX_Q = 5
DEFAULT_MAX_SEASONAL_P = 2
DEFAULT_MAX_SEASONAL_Q = 2
DEFAULT_MAX_D = 2
DEFAULT_MAX_SEASONAL_D = 1

# Hard limits for the configurable search (p,q <= 24 and d <= 4 is the widest grid)
LIMIT_P = 24
LIMIT_Q = 24
LIMIT_D = 4
LIMIT_SEASONAL_PQ = 5
LIMIT_SEASONAL_D = 1

# Seasonal differencing is chosen when seasonal strength reaches this value
SEASONAL_STRENGTH_THRESHOLD = 0.64

# Above this many candidates a full grid logs a cost warning
GRID_WARNING_SIZE = 500

# Holt-Winters
HW_START_PARAMS = (0.2, 0.1, 0.1)

# Neural-network autoregression
NNAR_RESTARTS = 20
NNAR_MAX_EPOCHS = 2000
NNAR_LEARNING_RATE = 0.1
NNAR_MIN_LEARNING_RATE = 1e-10
NNAR_RATE_GROWTH = 1.05
NNAR_PATHS = 1000
NNAR_MIN_PATHS = 100

# Forecast output
DEFAULT_LEVELS = (0.80, 0.95)
FIGURE_LEVELS = (0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.99)

# Chart rendering
CHART_SIZE = (1200, 600)  # Width x Height in pixels
CHART_MARGIN = 60
CHART_BACKGROUND = (255, 255, 255)
CHART_LINE_COLOR = (31, 119, 180)
CHART_ACTUAL_COLOR = (20, 20, 20)
CHART_BAND_COLOR = (31, 119, 180)
CHART_LINE_WIDTH = 2
CHART_HISTORY_POINTS = 168  # Hours of history shown before a forecast

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def ensure_directories():
    """Create output directories if they don't exist."""
    for directory in [OUTPUT_DIR, DATA_DIR, MODELS_DIR, FORECASTS_DIR, REPORTS_DIR, CHARTS_DIR]:
        directory.mkdir(parents=True, exist_ok=True)


def validate_config():
    """Validate configuration settings.

    Raises:
        ValueError: If a setting is out of range
    """
    if WORKERS < 1:
        raise ValueError(f"FORECAST_WORKERS must be >= 1, got: {WORKERS}")

    if LOG_LEVEL.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
        raise ValueError(f"LOG_LEVEL must be one of DEBUG, INFO, WARNING, ERROR, got: {LOG_LEVEL}")

    if not 0 < ALPHA < 1:
        raise ValueError(f"ALPHA must lie in (0, 1), got: {ALPHA}")

    if SELECTION_WINDOW < 0:
        raise ValueError(f"FORECAST_SELECTION_WINDOW must be >= 0, got: {SELECTION_WINDOW}")


def get_config_summary() -> dict:
    """Return a dictionary of current configuration."""
    return {
        "output_dir": str(OUTPUT_DIR),
        "default_arrivals_config": str(DEFAULT_ARRIVALS_CONFIG),
        "default_seed": DEFAULT_SEED,
        "workers": WORKERS,
        "alpha": ALPHA,
        "optimizer_max_iterations": OPTIMIZER_MAX_ITERATIONS,
        "selection_window": SELECTION_WINDOW,
    }
