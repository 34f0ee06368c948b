"""Neural-network autoregression: an ensemble of one-hidden-layer nets on lagged values."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .models import (
    Forecast,
    MinMaxScaler,
    ModelError,
    NetworkWeights,
    NnarModel,
    Series,
    validate_levels,
)

logger = logging.getLogger(__name__)

INIT_SCALE = 0.5


def lagged_design(values: np.ndarray, input_lags: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Rows of lagged inputs and their targets, starting at index max(input_lags)."""
    rows = np.arange(max(input_lags), values.size)
    inputs = np.column_stack([values[rows - lag] for lag in input_lags])
    return inputs, values[rows]


def loss_and_gradient(
    weights: NetworkWeights, inputs: np.ndarray, targets: np.ndarray
) -> Tuple[float, NetworkWeights]:
    """Mean squared error and its gradient by backpropagation.

    Returns:
        (loss, gradient) where the gradient has the same layout as the weights
    """
    hidden = np.tanh(inputs @ weights.w_hidden.T + weights.b_hidden)
    residual = hidden @ weights.w_out + weights.b_out - targets
    loss = float(np.mean(residual ** 2))

    d_out = 2.0 * residual / targets.size
    d_hidden = np.outer(d_out, weights.w_out) * (1.0 - hidden ** 2)
    gradient = NetworkWeights(
        w_hidden=d_hidden.T @ inputs,
        b_hidden=d_hidden.sum(axis=0),
        w_out=hidden.T @ d_out,
        b_out=float(d_out.sum()),
    )
    return loss, gradient


def train_network(
    inputs: np.ndarray,
    targets: np.ndarray,
    hidden: int,
    rng: np.random.Generator,
    max_epochs: int = config.NNAR_MAX_EPOCHS,
    learning_rate: float = config.NNAR_LEARNING_RATE,
) -> Tuple[NetworkWeights, List[float]]:
    """Full-batch gradient descent with bold-driver step control.

    A step is accepted only if it lowers the loss (the rate then grows by
    NNAR_RATE_GROWTH); otherwise the rate is halved. Training stops after
    max_epochs or once the rate falls below NNAR_MIN_LEARNING_RATE.

    Returns:
        Final weights and the loss after every accepted step
    """
    n_inputs = inputs.shape[1]
    size = hidden * n_inputs + 2 * hidden + 1
    flat = rng.uniform(-INIT_SCALE, INIT_SCALE, size=size)
    weights = NetworkWeights.unflatten(flat, hidden, n_inputs)
    loss, gradient = loss_and_gradient(weights, inputs, targets)
    losses = [loss]

    rate = learning_rate
    for _ in range(max_epochs):
        candidate = NetworkWeights.unflatten(weights.flatten() - rate * gradient.flatten(), hidden, n_inputs)
        candidate_loss, candidate_gradient = loss_and_gradient(candidate, inputs, targets)
        if candidate_loss < loss:
            weights, loss, gradient = candidate, candidate_loss, candidate_gradient
            losses.append(loss)
            rate *= config.NNAR_RATE_GROWTH
        else:
            rate /= 2.0
            if rate < config.NNAR_MIN_LEARNING_RATE:
                break

    return weights, losses


def _default_hidden(p: int, P: int) -> int:
    return max(1, int(math.floor((p + P + 1) / 2.0 + 0.5)))


def ensemble_predict(model: NnarModel, raw_inputs: np.ndarray) -> np.ndarray:
    """Average network output for rows of raw (unscaled) lagged inputs."""
    scaled = model.scaler.scale(raw_inputs)
    outputs = np.mean([network.predict(scaled) for network in model.networks], axis=0)
    return model.scaler.unscale(outputs)


def nnar_fit(
    series: Series,
    p: int,
    P: int = 0,
    s: int = 0,
    hidden: Optional[int] = None,
    restarts: int = config.NNAR_RESTARTS,
    seed: int = config.DEFAULT_SEED,
    max_epochs: int = config.NNAR_MAX_EPOCHS,
    workers: int = config.WORKERS,
) -> NnarModel:
    """Fit an NNAR(p, P, hidden)[s] ensemble.

    Inputs are lags 1..p and s, 2s, ..., Ps, min-max scaled to [-1, 1]. Each
    restart draws its initial weights from its own child of SeedSequence(seed),
    so the ensemble is reproducible whether restarts run in sequence or on
    worker threads.

    Raises:
        ModelError: On invalid orders, a too-short series or a constant series
    """
    if p < 0 or P < 0 or p + P < 1:
        raise ModelError(f"NNAR needs p + P >= 1 with non-negative orders, got p={p}, P={P}")
    if P > 0 and s < 2:
        raise ModelError(f"Seasonal lags require a period s >= 2, got: {s}")
    if restarts < 1:
        raise ModelError(f"NNAR restarts must be at least 1, got: {restarts}")
    hidden = _default_hidden(p, P) if hidden is None else hidden
    if hidden < 1:
        raise ModelError(f"NNAR hidden units must be at least 1, got: {hidden}")

    values = np.asarray(series.values, dtype=float)
    input_lags = sorted(set(range(1, p + 1)) | {s * k for k in range(1, P + 1)})
    max_lag = max(input_lags)
    if values.size <= max_lag + 10:
        raise ModelError(f"NNAR needs more than {max_lag + 10} values, got: {values.size}")

    scaler = MinMaxScaler(float(values.min()), float(values.max()))
    inputs, targets = lagged_design(scaler.scale(values), input_lags)

    def train(child: np.random.SeedSequence):
        return train_network(inputs, targets, hidden, np.random.default_rng(child), max_epochs)

    children = np.random.SeedSequence(seed).spawn(restarts)
    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            trained = list(executor.map(train, children))
    else:
        trained = [train(child) for child in children]

    networks = tuple(weights for weights, _ in trained)
    model = NnarModel(
        lags=p,
        seasonal_lags=P,
        s=s,
        hidden=hidden,
        networks=networks,
        scaler=scaler,
        residuals=series.with_values(np.zeros(values.size - max_lag), offset=max_lag),
        history=values[values.size - max_lag:].copy(),
        seed=seed,
        loss_history=tuple(tuple(losses) for _, losses in trained),
    )

    raw_inputs, raw_targets = lagged_design(values, input_lags)
    residuals = raw_targets - ensemble_predict(model, raw_inputs)
    logger.info(
        f"{model.label}: {restarts} restart(s), in-sample RMSE {math.sqrt(float(np.mean(residuals ** 2))):.4f}"
    )

    return replace(model, residuals=series.with_values(residuals, offset=max_lag, label=f"{model.label} residuals"))


def _iterate(model: NnarModel, h: int, buffer: np.ndarray, shocks: Optional[np.ndarray]) -> np.ndarray:
    """Recursive multi-step iteration over rows of `buffer` (paths x (max_lag + h))."""
    lags = np.array(model.input_lags)
    start = int(lags.max())
    for step in range(h):
        position = start + step
        prediction = ensemble_predict(model, buffer[:, position - lags])
        if shocks is not None:
            prediction = prediction + shocks[:, step]
        buffer[:, position] = prediction
    return buffer[:, start:]


def nnar_forecast(
    model: NnarModel,
    h: int,
    levels: Optional[Sequence[float]] = config.DEFAULT_LEVELS,
    paths: int = config.NNAR_PATHS,
    seed: int = config.DEFAULT_SEED,
) -> Forecast:
    """Recursive point forecasts; intervals from bootstrap-resampled residual paths.

    Bands come from empirical path quantiles and are widened where needed to
    contain the point forecast.

    Raises:
        ModelError: If h < 1 or fewer than NNAR_MIN_PATHS paths are requested with levels
    """
    if h < 1:
        raise ModelError(f"Forecast horizon must be at least 1, got: {h}")
    max_lag = max(model.input_lags)

    buffer = np.zeros((1, max_lag + h))
    buffer[:, :max_lag] = model.history
    points = _iterate(model, h, buffer, None)[0]

    lower, upper = {}, {}
    se = np.full(h, np.nan)
    if levels:
        levels = validate_levels(levels)
        if paths < config.NNAR_MIN_PATHS:
            raise ModelError(f"Bootstrap intervals need at least {config.NNAR_MIN_PATHS} paths, got: {paths}")
        rng = np.random.default_rng(seed)
        shocks = rng.choice(np.asarray(model.residuals.values), size=(paths, h), replace=True)
        buffer = np.zeros((paths, max_lag + h))
        buffer[:, :max_lag] = model.history
        simulated = _iterate(model, h, buffer, shocks)
        se = simulated.std(axis=0)
        for level in levels:
            low, high = np.quantile(simulated, [(1.0 - level) / 2.0, (1.0 + level) / 2.0], axis=0)
            lower[level] = np.minimum(low, points)
            upper[level] = np.maximum(high, points)
    else:
        levels = ()

    return Forecast(
        start=model.residuals.end + model.residuals.step,
        step=model.residuals.step,
        points=points,
        levels=tuple(levels),
        lower=lower,
        upper=upper,
        se=se,
        model_name=model.label,
    )


def nnar_update(model: NnarModel, series: Series) -> NnarModel:
    """Extend residuals and history over observations appended since the fit; weights unchanged.

    Raises:
        ModelError: If the series is shorter than the training data
    """
    values = np.asarray(series.values, dtype=float)
    max_lag = max(model.input_lags)
    absorbed = len(model.residuals) + max_lag
    if values.size < absorbed:
        raise ModelError(f"Update series has {values.size} values; the model was trained on {absorbed}")

    residuals = np.asarray(model.residuals.values)
    if values.size > absorbed:
        rows = np.arange(absorbed, values.size)
        lags = np.array(model.input_lags)
        fresh = values[rows] - ensemble_predict(model, values[rows[:, None] - lags])
        residuals = np.concatenate([residuals, fresh])

    return replace(
        model,
        residuals=series.with_values(residuals, offset=max_lag, label=model.residuals.label),
        history=values[values.size - max_lag:].copy(),
    )
