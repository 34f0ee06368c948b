"""Classical additive decomposition and periodic mean profiles."""

import logging

import numpy as np

from .models import Decomposition, Series, SeriesError

logger = logging.getLogger(__name__)


def _moving_average_weights(period: int) -> np.ndarray:
    """Centered MA weights: 2 x period for even periods, simple period MA for odd."""
    if period % 2 == 0:
        weights = np.ones(period + 1)
        weights[0] = weights[-1] = 0.5
        return weights / period
    return np.ones(period) / period


def classical_decompose(series: Series, period: int) -> Decomposition:
    """Split a series into trend, seasonal and remainder components.

    The trend is a centered moving average and is left undefined (NaN) in the
    half-window margins. The seasonal figure is the per-phase mean of the
    detrended values, re-centered to sum to zero; phase 0 is the first
    observation.

    Args:
        series: Input series
        period: Seasonal period (>= 2)

    Returns:
        Decomposition with aligned components

    Raises:
        SeriesError: If the period is invalid or the series covers fewer than two periods
    """
    if period < 2:
        raise SeriesError(f"Decomposition period must be at least 2, got: {period}")
    observed = np.asarray(series.values, dtype=float)
    n = observed.size
    if n < 2 * period:
        raise SeriesError(f"Decomposition needs at least two periods ({2 * period} values), got: {n}")

    weights = _moving_average_weights(period)
    half = weights.size // 2
    trend = np.full(n, np.nan)
    trend[half:n - half] = np.convolve(observed, weights, mode="valid")

    detrended = observed - trend
    figure = np.array([np.nanmean(detrended[phase::period]) for phase in range(period)])
    figure -= figure.mean()

    seasonal = figure[np.arange(n) % period]
    remainder = observed - trend - seasonal

    logger.debug(f"Decomposed {n} values with period {period}; trend margin {half} on each side")

    return Decomposition(
        start=series.start,
        step=series.step,
        period=period,
        observed=observed,
        trend=trend,
        seasonal=seasonal,
        remainder=remainder,
        seasonal_figure=figure,
    )


def mean_profile(series: Series, period: int) -> np.ndarray:
    """Mean of the observations at each phase 0..period-1 (e.g. the average 24-hour day)."""
    values = np.asarray(series.values, dtype=float)
    if period < 1:
        raise SeriesError(f"Profile period must be positive, got: {period}")
    if period > values.size:
        raise SeriesError(f"Profile period {period} exceeds the series length {values.size}")
    return np.array([values[phase::period].mean() for phase in range(period)])


def seasonal_strength(decomposition: Decomposition) -> float:
    """Fs = max(0, 1 - Var(remainder) / Var(seasonal + remainder)) over the defined interior."""
    defined = decomposition.defined()
    remainder = decomposition.remainder[defined]
    combined = decomposition.seasonal[defined] + remainder
    total = float(np.var(combined))
    if total <= 0.0:
        return 0.0
    return max(0.0, 1.0 - float(np.var(remainder)) / total)
