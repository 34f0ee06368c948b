"""Holt-Winters triple exponential smoothing (additive and multiplicative seasonality)."""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

from . import config
from .models import Forecast, HwModel, HwState, ModelError, Series, Variant, validate_levels
from .numeric import minimize, normal_quantile

logger = logging.getLogger(__name__)


def initial_state(values: np.ndarray, period: int, variant: Variant) -> HwState:
    """Level, trend and seasonal states from the first two periods.

    The states describe the series at index period - 1, just before the first
    smoothed observation.
    """
    first = values[:period]
    level = float(first.mean())
    trend = float(values[period:2 * period].mean() - level) / period
    if variant == "additive":
        seasonal = first - level
        seasonal = seasonal - seasonal.mean()
    else:
        seasonal = first / level
        seasonal = seasonal / seasonal.mean()
    return HwState(level=level, trend=trend, seasonal=tuple(float(s) for s in seasonal))


def _smooth(
    values: np.ndarray,
    period: int,
    variant: Variant,
    weights: Tuple[float, float, float],
    state: HwState,
    first: Optional[int] = None,
) -> Tuple[np.ndarray, float, float, np.ndarray]:
    """Run the update recursions over values[first:] (default first = period).

    Returns the one-step errors and the final level, trend and seasonal states.
    """
    first = period if first is None else first
    alpha, beta, gamma = weights
    level, trend = state.level, state.trend
    seasonal = list(state.seasonal)
    errors = np.empty(values.size - first)
    additive = variant == "additive"

    for t in range(first, values.size):
        y = values[t]
        phase = t % period
        s_old = seasonal[phase]
        if additive:
            errors[t - first] = y - (level + trend + s_old)
            new_level = alpha * (y - s_old) + (1.0 - alpha) * (level + trend)
            seasonal[phase] = gamma * (y - new_level) + (1.0 - gamma) * s_old
        else:
            errors[t - first] = y - (level + trend) * s_old
            new_level = alpha * (y / s_old) + (1.0 - alpha) * (level + trend)
            seasonal[phase] = gamma * (y / new_level) + (1.0 - gamma) * s_old
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        level = new_level

    return errors, level, trend, np.array(seasonal)


def hw_fit(
    series: Series,
    period: int,
    variant: Variant = "additive",
    params: Optional[Tuple[float, float, float]] = None,
    initial: Optional[HwState] = None,
) -> HwModel:
    """Fit a Holt-Winters model.

    Args:
        series: Training series (at least two periods)
        period: Seasonal period
        variant: 'additive' or 'multiplicative'
        params: Fixed (alpha, beta, gamma); optimised on one-step SSE when omitted
        initial: Explicit initial states (otherwise taken from the first two periods)

    Returns:
        HwModel with residuals for indices period..n-1

    Raises:
        ModelError: On invalid variant, weights, states or data
    """
    if variant not in ("additive", "multiplicative"):
        raise ModelError(f"Unknown Holt-Winters variant '{variant}'")
    if period < 2:
        raise ModelError(f"Holt-Winters period must be at least 2, got: {period}")
    values = np.asarray(series.values, dtype=float)
    if values.size < 2 * period:
        raise ModelError(f"Holt-Winters needs at least {2 * period} values, got: {values.size}")
    if variant == "multiplicative" and np.any(values <= 0):
        raise ModelError("Multiplicative Holt-Winters requires strictly positive data")

    state = initial or initial_state(values, period, variant)
    if len(state.seasonal) != period:
        raise ModelError(f"Initial seasonal state must have {period} entries, got: {len(state.seasonal)}")

    if params is None:
        def sse(logits: np.ndarray) -> float:
            errors = _smooth(values, period, variant, tuple(special.expit(logits)), state)[0]
            return float(errors @ errors)

        result = minimize(sse, special.logit(np.array(config.HW_START_PARAMS)))
        weights = tuple(float(w) for w in special.expit(result.argmin))
        if not result.converged:
            logger.warning(f"Holt-Winters weight search stopped after {result.iterations} iterations")
    else:
        weights = tuple(float(w) for w in params)
        if len(weights) != 3 or not all(0.0 <= w <= 1.0 for w in weights):
            raise ModelError(f"Smoothing weights must be three values in [0, 1], got: {params}")

    errors, level, trend, seasonal = _smooth(values, period, variant, weights, state)
    logger.debug(f"Holt-Winters weights alpha={weights[0]:.4f} beta={weights[1]:.4f} gamma={weights[2]:.4f}")

    return HwModel(
        period=period,
        variant=variant,
        alpha=weights[0],
        beta=weights[1],
        gamma=weights[2],
        level=level,
        trend=trend,
        seasonal=seasonal,
        sse=float(errors @ errors),
        residuals=series.with_values(errors, offset=period, label="HoltWinters residuals"),
        n=values.size,
    )


def hw_forecast(
    model: HwModel,
    h: int,
    levels: Sequence[float] = config.DEFAULT_LEVELS,
) -> Forecast:
    """Point forecasts with approximate intervals point +/- z * sigma_e * sqrt(h)."""
    if h < 1:
        raise ModelError(f"Forecast horizon must be at least 1, got: {h}")
    levels = validate_levels(levels)

    steps = np.arange(1, h + 1)
    phases = (model.n + steps - 1) % model.period
    if model.variant == "additive":
        points = model.level + steps * model.trend + model.seasonal[phases]
    else:
        points = (model.level + steps * model.trend) * model.seasonal[phases]

    residuals = np.asarray(model.residuals.values)
    sigma = math.sqrt(float(residuals @ residuals) / residuals.size)
    se = sigma * np.sqrt(steps)
    lower, upper = {}, {}
    for level in levels:
        half_width = normal_quantile((1.0 + level) / 2.0) * se
        lower[level] = points - half_width
        upper[level] = points + half_width

    return Forecast(
        start=model.residuals.end + model.residuals.step,
        step=model.residuals.step,
        points=np.asarray(points, dtype=float),
        levels=levels,
        lower=lower,
        upper=upper,
        se=se,
        model_name=model.label,
        approximate=True,
    )


def hw_update(model: HwModel, series: Series) -> HwModel:
    """Continue the recursions over observations appended since the fit, weights unchanged.

    Raises:
        ModelError: If the series is shorter than the data the model has absorbed
    """
    values = np.asarray(series.values, dtype=float)
    if values.size < model.n:
        raise ModelError(f"Update series has {values.size} values; the model has absorbed {model.n}")
    if model.variant == "multiplicative" and np.any(values[model.n:] <= 0):
        raise ModelError("Multiplicative Holt-Winters requires strictly positive data")

    state = HwState(model.level, model.trend, tuple(model.seasonal))
    weights = (model.alpha, model.beta, model.gamma)
    errors, level, trend, seasonal = _smooth(values, model.period, model.variant, weights, state, first=model.n)
    residuals = np.concatenate([model.residuals.values, errors])

    return HwModel(
        period=model.period,
        variant=model.variant,
        alpha=model.alpha,
        beta=model.beta,
        gamma=model.gamma,
        level=level,
        trend=trend,
        seasonal=seasonal,
        sse=float(residuals @ residuals),
        residuals=series.with_values(residuals, offset=model.period, label=model.residuals.label),
        n=values.size,
    )
