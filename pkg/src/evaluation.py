"""Forecast accuracy (ME, RMSE), interval coverage and rolling-origin backtests.

Errors are actual - predicted throughout: a positive mean error means the
model under-forecasts. Backtest scores are pooled over every (origin, step)
pair rather than averaged per origin.
"""

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from . import config, sarima
from .holt_winters import hw_fit, hw_forecast, hw_update
from .model_selection import SearchBounds, auto_select
from .models import (
    EvalReport,
    Forecast,
    ForecastingError,
    ModelError,
    OriginScore,
    SarimaOrder,
    Series,
    Variant,
    validate_levels,
)
from .nnar import nnar_fit, nnar_forecast, nnar_update

logger = logging.getLogger(__name__)

Values = Union[Series, Sequence[float], np.ndarray]


def _pair(actual: Values, predicted: Values):
    actual = np.asarray(actual.values if isinstance(actual, Series) else actual, dtype=float)
    predicted = np.asarray(predicted.values if isinstance(predicted, Series) else predicted, dtype=float)
    if actual.size == 0:
        raise ForecastingError("Cannot score an empty sequence")
    if actual.shape != predicted.shape:
        raise ForecastingError(f"Length mismatch: {actual.size} actual vs {predicted.size} predicted values")
    return actual, predicted


def mean_error(actual: Values, predicted: Values) -> float:
    """Mean of actual - predicted."""
    actual, predicted = _pair(actual, predicted)
    return float(np.mean(actual - predicted))


def rmse(actual: Values, predicted: Values) -> float:
    """Root mean squared error."""
    actual, predicted = _pair(actual, predicted)
    return math.sqrt(float(np.mean((actual - predicted) ** 2)))


def interval_coverage(actual: Values, forecast: Forecast) -> Dict[float, float]:
    """Fraction of actual values inside [lower, upper] (inclusive) for each level."""
    actual, _ = _pair(actual, forecast.points)
    return {
        level: float(np.mean((actual >= forecast.lower[level]) & (actual <= forecast.upper[level])))
        for level in forecast.levels
    }


# ---------------------------------------------------------------------------
# Model adapters
# ---------------------------------------------------------------------------

class ModelSpec(ABC):
    """How to fit, update and forecast one model family.

    `update` brings a fitted model forward over an extended series without
    re-estimating its parameters.
    """

    name = "model"

    @abstractmethod
    def fit(self, series: Series) -> Any:
        ...

    @abstractmethod
    def update(self, fitted: Any, series: Series) -> Any:
        ...

    @abstractmethod
    def forecast(self, fitted: Any, h: int, levels: Sequence[float]) -> Forecast:
        ...

    def aic(self, fitted: Any) -> Optional[float]:
        return None


@dataclass
class SarimaSpec(ModelSpec):
    """Seasonal ARIMA with a fixed order, or selected automatically when `order` is None."""
    order: Optional[SarimaOrder] = None
    s: int = 24
    criterion: str = "aic"
    strategy: str = "stepwise"
    bounds: Optional[SearchBounds] = None
    workers: int = config.WORKERS
    name: str = "sarima"

    def fit(self, series):
        if self.order is not None:
            return sarima.fit(series, self.order)
        return auto_select(series, self.s, self.bounds, self.criterion, self.strategy, workers=self.workers)

    def update(self, fitted, series):
        return sarima.refilter(fitted, series)

    def forecast(self, fitted, h, levels):
        return sarima.forecast(fitted, h, levels)

    def aic(self, fitted):
        return fitted.aic


@dataclass
class HoltWintersSpec(ModelSpec):
    period: int = 24
    variant: Variant = "additive"
    name: str = "hw"

    def fit(self, series):
        return hw_fit(series, self.period, self.variant)

    def update(self, fitted, series):
        return hw_update(fitted, series)

    def forecast(self, fitted, h, levels):
        return hw_forecast(fitted, h, levels)


@dataclass
class NnarSpec(ModelSpec):
    p: int = 3
    P: int = 1
    s: int = 24
    restarts: int = config.NNAR_RESTARTS
    seed: int = config.DEFAULT_SEED
    workers: int = config.WORKERS
    name: str = "nnar"

    def fit(self, series):
        return nnar_fit(
            series, self.p, self.P, self.s, restarts=self.restarts, seed=self.seed, workers=self.workers
        )

    def update(self, fitted, series):
        return nnar_update(fitted, series)

    def forecast(self, fitted, h, levels):
        return nnar_forecast(fitted, h, levels, seed=self.seed)


def _integers(text: str, spec: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError as e:
        raise ModelError(f"Invalid model spec '{spec}': expected comma-separated integers") from e


def parse_model_spec(
    text: str,
    s: int = 24,
    seed: int = config.DEFAULT_SEED,
    criterion: str = "aic",
    strategy: str = "stepwise",
    workers: int = config.WORKERS,
) -> ModelSpec:
    """Parse 'sarima', 'sarima:p,d,q[,P,D,Q,s]', 'hw', 'hw:period:variant', 'nnar' or 'nnar:p,P,s[,restarts]'.

    Raises:
        ModelError: On an unknown family or malformed parameters
    """
    family, _, params = text.strip().partition(":")
    family = family.lower()

    if family == "sarima":
        order = SarimaOrder.parse(params) if params else None
        return SarimaSpec(
            order=order, s=s, criterion=criterion, strategy=strategy, workers=workers, name=text.strip()
        )

    if family == "hw":
        if not params:
            return HoltWintersSpec(period=s if s >= 2 else 24, name=text.strip())
        period, _, variant = params.partition(":")
        variant = variant or "additive"
        if variant not in ("additive", "multiplicative"):
            raise ModelError(f"Invalid model spec '{text}': unknown variant '{variant}'")
        return HoltWintersSpec(period=_integers(period, text)[0], variant=variant, name=text.strip())

    if family == "nnar":
        if not params:
            return NnarSpec(p=3, P=1 if s >= 2 else 0, s=s, seed=seed, workers=workers, name=text.strip())
        fields = _integers(params, text)
        if len(fields) not in (3, 4):
            raise ModelError(f"Invalid model spec '{text}': expected nnar:p,P,s[,restarts]")
        restarts = fields[3] if len(fields) == 4 else config.NNAR_RESTARTS
        return NnarSpec(
            p=fields[0], P=fields[1], s=fields[2],
            restarts=restarts, seed=seed, workers=workers, name=text.strip(),
        )

    raise ModelError(f"Unknown model family '{family}' (expected sarima, hw or nnar)")


# ---------------------------------------------------------------------------
# Backtests
# ---------------------------------------------------------------------------

def rolling_origin_backtest(
    series: Series,
    model_spec: ModelSpec,
    first_origin: int,
    step: int = 1,
    h: int = 1,
    levels: Sequence[float] = config.DEFAULT_LEVELS,
    refit: bool = True,
    workers: int = 1,
) -> EvalReport:
    """Fit on [0, o), forecast h steps and score against [o, o + h) for o = first_origin, +step, ...

    With refit=False the model is estimated once at the first origin and only
    updated (parameters fixed) at later origins.

    Raises:
        ForecastingError: If no origin leaves a full horizon inside the series
    """
    n = len(series)
    if step < 1 or h < 1:
        raise ForecastingError(f"Backtest step and horizon must be positive, got step={step}, h={h}")
    if first_origin < 1 or first_origin + h > n:
        raise ForecastingError(
            f"No valid origin: first_origin={first_origin}, h={h}, series length {n}"
        )
    levels = validate_levels(levels)
    origins = list(range(first_origin, n - h + 1, step))

    if refit:
        def fitted_at(origin):
            return model_spec.fit(series.slice(0, origin))

        if workers > 1 and len(origins) > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                fits = list(executor.map(fitted_at, origins))
        else:
            fits = [fitted_at(origin) for origin in origins]
    else:
        base = model_spec.fit(series.slice(0, first_origin))
        fits = [base] + [model_spec.update(base, series.slice(0, origin)) for origin in origins[1:]]

    errors, inside, per_origin = [], {level: 0 for level in levels}, []
    for origin, fitted in zip(origins, fits):
        forecast = model_spec.forecast(fitted, h, levels)
        actual = np.asarray(series.values[origin:origin + h])
        residual = actual - forecast.points
        errors.append(residual)
        for level in levels:
            inside[level] += int(np.sum((actual >= forecast.lower[level]) & (actual <= forecast.upper[level])))
        per_origin.append(OriginScore(
            origin=series.timestamp_at(origin),
            me=float(residual.mean()),
            rmse=math.sqrt(float(np.mean(residual ** 2))),
            n_points=h,
        ))

    pooled = np.concatenate(errors)
    report = EvalReport(
        model_name=model_spec.name,
        me=float(pooled.mean()),
        rmse=math.sqrt(float(np.mean(pooled ** 2))),
        coverage={level: inside[level] / pooled.size for level in levels},
        n_points=int(pooled.size),
        per_origin=per_origin,
        aic=model_spec.aic(fits[0]),
    )
    logger.info(
        f"{model_spec.name}: {len(origins)} origin(s), ME={report.me:.4f} RMSE={report.rmse:.4f}"
    )
    return report


def holdout_evaluate(
    series: Series,
    boundary: int,
    model_spec: ModelSpec,
    levels: Sequence[float] = config.DEFAULT_LEVELS,
) -> EvalReport:
    """Single origin at the boundary, forecasting the whole test part."""
    h = len(series) - boundary
    return rolling_origin_backtest(series, model_spec, boundary, step=max(h, 1), h=h, levels=levels)


def one_step_evaluate(
    series: Series,
    boundary: int,
    model_spec: ModelSpec,
    levels: Sequence[float] = config.DEFAULT_LEVELS,
) -> EvalReport:
    """One-step-ahead forecasts over the test part without re-estimation."""
    return rolling_origin_backtest(series, model_spec, boundary, step=1, h=1, levels=levels, refit=False)
