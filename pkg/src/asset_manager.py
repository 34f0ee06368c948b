"""File formats and output locations: series/forecast/decomposition/evaluation CSVs, model and report JSON."""

import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from . import config
from .chart_renderer import Chart, ChartRenderer
from .models import (
    Decomposition,
    DiagnosticReport,
    EvalReport,
    Forecast,
    SarimaFit,
    Series,
    format_timestamp,
    validate_sarima_document,
)
from .series import read_series_csv, write_series_csv

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def level_tag(level: float) -> str:
    """Percent text used in column names: 0.8 -> '80', 0.995 -> '99.5'."""
    return f"{level * 100:g}"


class AssetManager:
    """Reads and writes every file the pipeline produces."""

    def __init__(self, output_dir: Optional[Path] = None, renderer: Optional[ChartRenderer] = None):
        """Initialize asset manager.

        Args:
            output_dir: Root for default output paths (defaults to config.OUTPUT_DIR)
            renderer: Chart renderer (a default one is created when omitted)
        """
        self.output_dir = Path(output_dir) if output_dir else config.OUTPUT_DIR
        self.directories = {
            "data": self.output_dir / "data",
            "models": self.output_dir / "models",
            "forecasts": self.output_dir / "forecasts",
            "reports": self.output_dir / "reports",
            "charts": self.output_dir / "charts",
        }
        self.renderer = renderer or ChartRenderer()

    def _sanitize_id(self, name: str) -> str:
        """Make a series label safe for use in file names."""
        cleaned = "".join(c if c.isalnum() or c in ["-", "_"] else "_" for c in name)
        return cleaned or "series"

    def default_path(self, kind: str, name: str, suffix: str) -> Path:
        """Path under the output directory for an artifact without an explicit --out."""
        if kind not in self.directories:
            raise ValueError(f"Unknown artifact kind '{kind}'")
        directory = self.directories[kind]
        directory.mkdir(parents=True, exist_ok=True)
        return directory / f"{self._sanitize_id(name)}{suffix}"

    def resolve(self, path: Optional[PathLike], kind: str, name: str, suffix: str) -> Path:
        return Path(path) if path else self.default_path(kind, name, suffix)

    @staticmethod
    def _write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n", na_rep="")
        logger.info(f"Wrote {path}")
        return path

    @staticmethod
    def _write_json(document: dict, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2, ensure_ascii=False)
            f.write("\n")
        logger.info(f"Wrote {path}")
        return path

    # -----------------------------------------------------------------
    # Series
    # -----------------------------------------------------------------

    def load_series(self, path: PathLike, column: str = "value", gap_policy: str = "error") -> Series:
        return read_series_csv(path, column=column, gap_policy=gap_policy)

    def save_series(self, series: Series, path: PathLike) -> Path:
        path = write_series_csv(series, path)
        logger.info(f"Wrote {path}")
        return path

    # -----------------------------------------------------------------
    # Forecasts
    # -----------------------------------------------------------------

    @staticmethod
    def forecast_frame(forecast: Forecast) -> pd.DataFrame:
        """`timestamp,point,lo<level>,hi<level>...` with levels ascending."""
        columns = {
            "timestamp": [format_timestamp(ts) for ts in forecast.timestamps()],
            "point": forecast.points,
        }
        for level in sorted(forecast.levels):
            columns[f"lo{level_tag(level)}"] = forecast.lower[level]
            columns[f"hi{level_tag(level)}"] = forecast.upper[level]
        return pd.DataFrame(columns)

    def save_forecast(self, forecast: Forecast, path: PathLike) -> Path:
        return self._write_frame(self.forecast_frame(forecast), path)

    # -----------------------------------------------------------------
    # Decomposition and profiles
    # -----------------------------------------------------------------

    def save_decomposition(self, decomposition: Decomposition, path: PathLike) -> Path:
        """Write `timestamp,observed,trend,seasonal,remainder`; undefined trend cells stay empty."""
        n = decomposition.observed.size
        frame = pd.DataFrame({
            "timestamp": [format_timestamp(decomposition.start + i * decomposition.step) for i in range(n)],
            "observed": decomposition.observed,
            "trend": decomposition.trend,
            "seasonal": decomposition.seasonal,
            "remainder": decomposition.remainder,
        })
        return self._write_frame(frame, path)

    def save_profile(self, profile: Sequence[float], path: PathLike) -> Path:
        """Write `phase,mean`."""
        profile = np.asarray(profile, dtype=float)
        frame = pd.DataFrame({"phase": np.arange(profile.size), "mean": profile})
        return self._write_frame(frame, path)

    # -----------------------------------------------------------------
    # Evaluation tables
    # -----------------------------------------------------------------

    def save_evaluation(
        self,
        rows: Iterable[Tuple[str, EvalReport]],
        path: PathLike,
        levels: Sequence[float] = config.DEFAULT_LEVELS,
        include_aic: bool = False,
    ) -> Path:
        """Write `model,me,rmse,coverage_<pct>...,n` (plus `aic` when requested).

        Args:
            rows: (row label, report) pairs in output order
            path: Destination CSV
            levels: Coverage levels to report
            include_aic: Append an `aic` column, empty where a model has none
        """
        records = []
        for name, report in rows:
            record = report.to_row(levels)
            record["model"] = name
            if include_aic:
                record["aic"] = report.aic
            records.append(record)
        columns = ["model", "me", "rmse"] + [f"coverage_{level_tag(level)}" for level in levels] + ["n"]
        if include_aic:
            columns.append("aic")
        return self._write_frame(pd.DataFrame(records, columns=columns), path)

    # -----------------------------------------------------------------
    # Models and reports
    # -----------------------------------------------------------------

    def save_model(self, fitted: SarimaFit, path: PathLike) -> Path:
        return self._write_json(fitted.to_dict(), path)

    def load_model(self, path: PathLike) -> SarimaFit:
        """Load and validate a persisted model.

        Raises:
            FileNotFoundError: If the file does not exist
            ValueError: If the file is not valid JSON or not a valid model document
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Model file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
        if not isinstance(document, dict):
            raise ValueError(f"{path}: model file must contain a JSON object")
        return validate_sarima_document(document)

    def save_report(self, report: DiagnosticReport, path: PathLike) -> Path:
        return self._write_json(report.to_dict(), path)

    def save_chart(self, chart: Chart, path: PathLike) -> Path:
        return self.renderer.render(chart, Path(path))
