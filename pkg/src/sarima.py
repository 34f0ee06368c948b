"""Seasonal ARIMA simulation, exact-likelihood estimation and interval forecasts.

The model for a series y with differenced values w = (1-B)^d (1-B^s)^D y is

    phi(B) Phi(B^s) (w_t - mu) = theta(B) Theta(B^s) e_t,   e_t ~ N(0, sigma2)

The seasonal and non-seasonal polynomials are multiplied into one expanded
ARMA which is filtered in state-space form: the state holds the r most recent
values of the autoregressive part, r = max(ar degree, ma degree + 1). Once the
predicted state covariance has collapsed onto its first element the remaining
observations are filtered with `scipy.signal.lfilter`, which gives the same
innovations as the covariance recursion at a fraction of the cost. The
recursion runs for at most `config.KALMAN_EXACT_STEPS` observations: past that
the tail conditions on the filtered state, so the likelihood of a model with
MA roots close to the unit circle is approximate from there on.
"""

import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, signal

from . import config
from .models import (
    Forecast,
    ModelError,
    SarimaCoefficients,
    SarimaFit,
    SarimaOrder,
    Series,
    validate_levels,
)
from .numeric import minimize, normal_quantile

logger = logging.getLogger(__name__)

MeanMode = Literal["auto", "on", "off"]

SIMULATION_START = datetime(2014, 1, 1, tzinfo=timezone.utc)

# Partial autocorrelations are kept strictly inside (-1, 1)
MAX_PARTIAL = 0.99999
STEADY_STATE_TOL = 1e-9
INITIAL_SIMPLEX_STEP = 0.1
LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

def _lag_polynomial(coefficients: Sequence[float], spacing: int, sign: float) -> np.ndarray:
    """1 + sign * sum c_i B^(i * spacing), lowest power first."""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.size == 0:
        return np.ones(1)
    poly = np.zeros(coefficients.size * spacing + 1)
    poly[0] = 1.0
    poly[spacing::spacing] = sign * coefficients
    return poly


def expand_polynomials(coefficients: SarimaCoefficients, s: int) -> Tuple[np.ndarray, np.ndarray]:
    """Return the expanded AR polynomial phi(B)Phi(B^s) and MA polynomial theta(B)Theta(B^s)."""
    ar_poly = np.convolve(
        _lag_polynomial(coefficients.ar, 1, -1.0),
        _lag_polynomial(coefficients.seasonal_ar, s, -1.0),
    )
    ma_poly = np.convolve(
        _lag_polynomial(coefficients.ma, 1, 1.0),
        _lag_polynomial(coefficients.seasonal_ma, s, 1.0),
    )
    return ar_poly, ma_poly


def integration_polynomial(order: SarimaOrder) -> np.ndarray:
    """(1-B)^d (1-B^s)^D, lowest power first."""
    poly = np.ones(1)
    for _ in range(order.d):
        poly = np.convolve(poly, [1.0, -1.0])
    for _ in range(order.D):
        poly = np.convolve(poly, _lag_polynomial([1.0], order.s, -1.0))
    return poly


def roots_outside_unit_circle(poly: Sequence[float]) -> bool:
    """True when every root of the lag polynomial lies strictly outside the unit circle."""
    poly = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if poly.size <= 1:
        return True
    roots = np.polynomial.polynomial.polyroots(poly)
    return bool(np.all(np.abs(roots) > 1.0))


def check_coefficients(coefficients: SarimaCoefficients, order: SarimaOrder) -> None:
    """Raise ModelError unless the coefficients fit the order and are stationary and invertible."""
    coefficients.check(order)
    blocks = [
        ("ar", _lag_polynomial(coefficients.ar, 1, -1.0), "stationary"),
        ("seasonal_ar", _lag_polynomial(coefficients.seasonal_ar, 1, -1.0), "stationary"),
        ("ma", _lag_polynomial(coefficients.ma, 1, 1.0), "invertible"),
        ("seasonal_ma", _lag_polynomial(coefficients.seasonal_ma, 1, 1.0), "invertible"),
    ]
    for name, poly, property_name in blocks:
        if not roots_outside_unit_circle(poly):
            raise ModelError(f"Coefficients '{name}' are not {property_name}: {getattr(coefficients, name)}")


def _difference(values: np.ndarray, order: SarimaOrder) -> np.ndarray:
    for _ in range(order.d):
        values = np.diff(values)
    for _ in range(order.D):
        values = values[order.s:] - values[:-order.s]
    return values


# ---------------------------------------------------------------------------
# Partial-autocorrelation parametrisation
# ---------------------------------------------------------------------------

def constrain_partials(unconstrained: Sequence[float]) -> np.ndarray:
    """Map real numbers to the coefficients of a stationary AR polynomial.

    Each value becomes a partial autocorrelation tanh(u) which the
    Durbin-Levinson recursion turns into AR coefficients.
    """
    partials = np.clip(np.tanh(np.asarray(unconstrained, dtype=float)), -MAX_PARTIAL, MAX_PARTIAL)
    phi = np.zeros(0)
    for rk in partials:
        phi = np.concatenate([phi - rk * phi[::-1], [rk]])
    return phi


def unconstrain_partials(coefficients: Sequence[float]) -> np.ndarray:
    """Inverse of constrain_partials for stationary coefficients."""
    phi = np.asarray(coefficients, dtype=float)
    partials = np.empty(phi.size)
    for k in range(phi.size - 1, -1, -1):
        rk = float(np.clip(phi[-1], -MAX_PARTIAL, MAX_PARTIAL))
        partials[k] = rk
        head = phi[:-1]
        phi = (head + rk * head[::-1]) / (1.0 - rk ** 2)
    return np.arctanh(partials)


class Parametrization:
    """Packs coefficients (and an optional mean) into an unconstrained vector.

    Layout: AR, MA, seasonal AR, seasonal MA transforms, then the mean.
    MA polynomials use theta = -constrain(u) so invertibility follows from
    stationarity of the mirrored polynomial.
    """

    def __init__(self, order: SarimaOrder, include_mean: bool):
        self.order = order
        self.include_mean = include_mean
        self.size = order.n_coefficients + (1 if include_mean else 0)

    def pack(self, coefficients: SarimaCoefficients, mean: Optional[float]) -> np.ndarray:
        parts = [
            unconstrain_partials(coefficients.ar),
            unconstrain_partials(-np.asarray(coefficients.ma)),
            unconstrain_partials(coefficients.seasonal_ar),
            unconstrain_partials(-np.asarray(coefficients.seasonal_ma)),
        ]
        if self.include_mean:
            parts.append([0.0 if mean is None else mean])
        return np.concatenate(parts) if parts else np.zeros(0)

    def unpack(self, params: np.ndarray) -> Tuple[SarimaCoefficients, Optional[float]]:
        order = self.order
        cuts = np.cumsum([order.p, order.q, order.P, order.Q])
        ar, ma, seasonal_ar, seasonal_ma = np.split(np.asarray(params[:cuts[-1]], dtype=float), cuts[:-1])
        coefficients = SarimaCoefficients(
            ar=tuple(constrain_partials(ar)),
            ma=tuple(-constrain_partials(ma)),
            seasonal_ar=tuple(constrain_partials(seasonal_ar)),
            seasonal_ma=tuple(-constrain_partials(seasonal_ma)),
        )
        mean = float(params[cuts[-1]]) if self.include_mean else None
        return coefficients, mean


# ---------------------------------------------------------------------------
# Kalman filter
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FilterOutput:
    """One-step innovations v_t, their variances F_t (in units of sigma2) and the final predicted state."""
    innovations: np.ndarray
    variances: np.ndarray
    state: np.ndarray

    @property
    def n(self) -> int:
        return int(self.innovations.size)

    def sigma2(self) -> float:
        """Concentrated maximum-likelihood estimate of sigma2."""
        return float(np.mean(self.innovations ** 2 / self.variances))

    def loglik(self, sigma2: Optional[float] = None) -> float:
        """Exact Gaussian log-likelihood; sigma2 is concentrated out when not given."""
        n = self.n
        log_f = float(np.sum(np.log(self.variances)))
        if sigma2 is None:
            estimate = self.sigma2()
            if not estimate > 0:
                return -math.inf
            return -0.5 * n * (LOG_2PI + 1.0 + math.log(estimate)) - 0.5 * log_f
        scaled = float(np.sum(self.innovations ** 2 / self.variances))
        return -0.5 * (n * (LOG_2PI + math.log(sigma2)) + log_f + scaled / sigma2)


def _companion_sandwich(a: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """T cov T' for the companion matrix T with first row a."""
    left = np.empty_like(cov)
    left[0] = a @ cov
    left[1:] = cov[:-1]
    out = np.empty_like(cov)
    out[:, 0] = left @ a
    out[:, 1:] = left[:, :-1]
    return out


def _steady_state_tail(
    w: np.ndarray, t0: int, a: np.ndarray, ma: np.ndarray,
    x: np.ndarray, innovations: np.ndarray, variances: np.ndarray,
) -> np.ndarray:
    """Filter w[t0:] once the past states are known exactly; returns the final predicted state."""
    r = a.size
    past = x[1:]  # xi_{t0-1}, ..., xi_{t0-r+1}
    remaining = w[t0:]
    if ma.size:
        ma_poly = np.concatenate([[1.0], ma])
        xi, _ = signal.lfilter([1.0], ma_poly, remaining, zi=signal.lfiltic([1.0], ma_poly, past))
    else:
        xi = remaining.copy()

    innovations[t0] = xi[0] - x[0]
    history = np.concatenate([past[::-1], xi])
    innovations[t0 + 1:] = signal.lfilter(np.concatenate([[1.0], -a]), [1.0], history)[r:]
    variances[t0:] = 1.0

    recent = history[::-1][:r]
    return np.concatenate([[a @ recent], recent[:-1]])


def kalman_filter(
    values: Sequence[float],
    ar: Sequence[float],
    ma: Sequence[float],
    exact_steps: int = config.KALMAN_EXACT_STEPS,
) -> FilterOutput:
    """Run the state-space filter of a zero-mean ARMA in expanded form.

    Args:
        values: Observations w_1..w_n
        ar: Expanded AR coefficients a_i (w_t = sum a_i w_{t-i} + ...)
        ma: Expanded MA coefficients m_j
        exact_steps: Most observations run through the covariance recursion

    Returns:
        FilterOutput in units of sigma2 = 1

    Raises:
        ModelError: If the prediction variance becomes non-positive
    """
    w = np.asarray(values, dtype=float)
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    n = w.size
    r = max(ar.size, ma.size + 1)

    a = np.zeros(r)
    a[:ar.size] = ar
    z = np.zeros(r)
    z[0] = 1.0
    z[1:ma.size + 1] = ma

    transition = np.zeros((r, r))
    transition[0] = a
    transition[1:, :-1] = np.eye(r - 1)
    impact = np.zeros((r, r))
    impact[0, 0] = 1.0

    cov = linalg.solve_discrete_lyapunov(transition, impact)
    x = np.zeros(r)
    innovations = np.empty(n)
    variances = np.empty(n)

    t = 0
    while t < n:
        pz = cov @ z
        f = float(z @ pz)
        if not f > 0:
            raise ModelError(f"Non-positive prediction variance at step {t}")
        v = w[t] - z @ x
        innovations[t] = v
        variances[t] = f

        filtered = x + pz * (v / f)
        x = np.concatenate([[a @ filtered], filtered[:-1]])
        cov = _companion_sandwich(a, cov - np.outer(pz, pz) / f)
        cov[0, 0] += 1.0
        t += 1

        deviation = cov.copy()
        deviation[0, 0] -= 1.0
        if t >= exact_steps or np.max(np.abs(deviation)) < STEADY_STATE_TOL:
            if t < n:
                x = _steady_state_tail(w, t, a, ma, x, innovations, variances)
            break

    return FilterOutput(innovations=innovations, variances=variances, state=x)


def exact_loglike(
    values: Sequence[float],
    ar: Sequence[float],
    ma: Sequence[float],
    sigma2: Optional[float] = None,
) -> float:
    """Exact Gaussian log-likelihood of a zero-mean ARMA given expanded coefficients."""
    return kalman_filter(values, ar, ma).loglik(sigma2)


def _filter_coefficients(w: np.ndarray, coefficients: SarimaCoefficients, s: int) -> FilterOutput:
    ar_poly, ma_poly = expand_polynomials(coefficients, s)
    return kalman_filter(w, -ar_poly[1:], ma_poly[1:])


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------

def information_criteria(loglik: float, k: int, n: int) -> Tuple[float, float]:
    """Return (aic, bic) = (-2 loglik + 2k, -2 loglik + k ln n)."""
    if n < 1:
        raise ModelError(f"Information criteria need n >= 1, got: {n}")
    return -2.0 * loglik + 2.0 * k, -2.0 * loglik + k * math.log(n)


def _zero_coefficients(order: SarimaOrder) -> SarimaCoefficients:
    return SarimaCoefficients(
        ar=(0.0,) * order.p, ma=(0.0,) * order.q,
        seasonal_ar=(0.0,) * order.P, seasonal_ma=(0.0,) * order.Q,
    )


def _lag_matrix(values: np.ndarray, rows: np.ndarray, lags: Sequence[int]) -> np.ndarray:
    return np.column_stack([values[rows - lag] for lag in lags])


def hannan_rissanen(values: Sequence[float], order: SarimaOrder) -> SarimaCoefficients:
    """Two-stage regression starting values for the ARMA coefficients.

    A long autoregression supplies innovation estimates; the series is then
    regressed on its own lags and on the lagged innovations. Seasonal lags
    enter additively. Blocks that come out non-stationary or non-invertible are
    replaced by zeros.
    """
    w = np.asarray(values, dtype=float)
    zeros = _zero_coefficients(order)
    if order.n_coefficients == 0:
        return zeros

    n = w.size
    ar_lags = list(range(1, order.p + 1)) + [order.s * i for i in range(1, order.P + 1)]
    ma_lags = list(range(1, order.q + 1)) + [order.s * i for i in range(1, order.Q + 1)]
    max_lag = max(ar_lags + ma_lags)

    innovations = np.zeros(n)
    long_order = 0
    if ma_lags:
        long_order = min(max(int(math.log(n) ** 2), 2 * max_lag), n // 3)
        rows = np.arange(long_order, n)
        if long_order < 1 or rows.size <= 2 * long_order:
            return zeros
        design = _lag_matrix(w, rows, range(1, long_order + 1))
        beta, _, _, _ = np.linalg.lstsq(design, w[rows], rcond=None)
        innovations[rows] = w[rows] - design @ beta

    rows = np.arange(long_order + max_lag, n)
    regressors = len(ar_lags) + len(ma_lags)
    if rows.size <= regressors + 10:
        return zeros
    columns = [w[rows - lag] for lag in ar_lags] + [innovations[rows - lag] for lag in ma_lags]
    beta, _, _, _ = np.linalg.lstsq(np.column_stack(columns), w[rows], rcond=None)

    cuts = np.cumsum([order.p, order.P, order.q])
    ar, seasonal_ar, ma, seasonal_ma = np.split(beta, cuts)
    blocks = {"ar": ar, "seasonal_ar": seasonal_ar, "ma": ma, "seasonal_ma": seasonal_ma}
    for name, block in blocks.items():
        sign = 1.0 if name.endswith("ma") else -1.0
        if not roots_outside_unit_circle(_lag_polynomial(block, 1, sign)):
            logger.debug(f"Hannan-Rissanen {name} start {block} is not admissible; using zeros")
            blocks[name] = np.zeros(block.size)
    return SarimaCoefficients(**{name: tuple(block) for name, block in blocks.items()})


def _differenced(series: Series, order: SarimaOrder) -> np.ndarray:
    span = order.integration_span
    if len(series) <= span:
        raise ModelError(
            f"Series of length {len(series)} is too short for {order.label} (needs more than {span} values)"
        )
    return _difference(np.asarray(series.values, dtype=float), order)


def _resolve_mean(include_mean: MeanMode, order: SarimaOrder) -> bool:
    if include_mean == "auto":
        return order.d + order.D == 0
    if include_mean == "on":
        return True
    if include_mean == "off":
        return False
    raise ModelError(f"include_mean must be 'auto', 'on' or 'off', got: {include_mean}")


def _assemble(
    series: Series,
    order: SarimaOrder,
    coefficients: SarimaCoefficients,
    mean: Optional[float],
    output: FilterOutput,
    sigma2: float,
    loglik: float,
    converged: bool,
) -> SarimaFit:
    span = order.integration_span
    k = order.n_coefficients + (1 if mean is not None else 0) + 1
    aic, bic = information_criteria(loglik, k, output.n)
    residuals = series.with_values(
        output.innovations / np.sqrt(output.variances),
        offset=span,
        label=f"{order.label} residuals",
    )
    return SarimaFit(
        order=order,
        ar=coefficients.ar,
        ma=coefficients.ma,
        seasonal_ar=coefficients.seasonal_ar,
        seasonal_ma=coefficients.seasonal_ma,
        mean=mean,
        sigma2=float(sigma2),
        loglik=float(loglik),
        aic=aic,
        bic=bic,
        n_effective=output.n,
        converged=converged,
        state=np.array(output.state, dtype=float),
        history=np.array(series.values[len(series) - span:], dtype=float),
        train_start=series.start,
        train_end=series.end,
        step=series.step,
        residuals=residuals,
    )


def fit(
    series: Series,
    order: SarimaOrder,
    include_mean: MeanMode = "auto",
    start: Optional[SarimaCoefficients] = None,
    xatol: float = config.SARIMA_XATOL,
    fatol: float = config.SARIMA_FATOL,
) -> SarimaFit:
    """Estimate a seasonal ARIMA by exact maximum likelihood.

    Args:
        series: Training series
        order: Model orders
        include_mean: 'auto' (mean iff d + D == 0), 'on' or 'off'
        start: Starting coefficients (Hannan-Rissanen when omitted or inadmissible)
        xatol: Optimizer simplex-size tolerance
        fatol: Optimizer tolerance on the negative log-likelihood

    Returns:
        SarimaFit; `converged` is False when the optimizer stopped on its budget

    Raises:
        ModelError: If the series is too short or has zero variance after differencing
    """
    w = _differenced(series, order)
    needed = 10 * (order.n_coefficients + 1)
    if w.size < needed:
        raise ModelError(
            f"{order.label} needs at least {needed} values after differencing, got: {w.size}"
        )
    if not np.var(w) > 0:
        raise ModelError("Series has zero variance after differencing")

    use_mean = _resolve_mean(include_mean, order)
    sample_mean = float(w.mean()) if use_mean else None
    parametrization = Parametrization(order, use_mean)

    def negative_loglik(params: np.ndarray) -> float:
        coefficients, mean = parametrization.unpack(params)
        centered = w - mean if mean is not None else w
        try:
            return -_filter_coefficients(centered, coefficients, order.s).loglik()
        except (ModelError, np.linalg.LinAlgError, ValueError):
            return math.inf

    converged = True
    if parametrization.size == 0:
        params = np.zeros(0)
    else:
        centered = w - sample_mean if use_mean else w
        candidates = [hannan_rissanen(centered, order), _zero_coefficients(order)]
        if start is not None:
            try:
                check_coefficients(start, order)
                candidates.insert(0, start)
            except ModelError as e:
                logger.debug(f"{order.label}: ignoring starting values: {e}")
        params = None
        for coefficients in candidates:
            packed = parametrization.pack(coefficients, sample_mean)
            if np.isfinite(negative_loglik(packed)):
                params = packed
                break
        if params is None:
            raise ModelError(f"{order.label}: likelihood is not finite at the starting values")
        result = minimize(
            negative_loglik, params, xatol=xatol, fatol=fatol, initial_step=INITIAL_SIMPLEX_STEP
        )
        params, converged = result.argmin, result.converged
        logger.debug(
            f"{order.label}: -loglik {result.objective:.4f} after {result.iterations} iterations"
        )

    coefficients, mean = parametrization.unpack(params)
    centered = w - mean if mean is not None else w
    output = _filter_coefficients(centered, coefficients, order.s)
    sigma2 = output.sigma2()
    loglik = output.loglik()

    if not converged:
        logger.warning(f"{order.label}: optimizer did not converge; returning best-effort fit")

    return _assemble(series, order, coefficients, mean, output, sigma2, loglik, converged)


def apply(
    series: Series,
    order: SarimaOrder,
    coefficients: SarimaCoefficients,
    mean: Optional[float] = None,
    sigma2: Optional[float] = None,
) -> SarimaFit:
    """Build a fit from known coefficients by filtering the series.

    With sigma2 given the exact full likelihood is reported; otherwise sigma2 is
    estimated by concentration.

    Raises:
        ModelError: If the coefficients are inadmissible or the series too short
    """
    check_coefficients(coefficients, order)
    if sigma2 is not None and not sigma2 > 0:
        raise ModelError(f"sigma2 must be positive, got: {sigma2}")
    w = _differenced(series, order)
    centered = w - mean if mean is not None else w
    output = _filter_coefficients(centered, coefficients, order.s)
    if sigma2 is None:
        sigma2, loglik = output.sigma2(), output.loglik()
    else:
        loglik = output.loglik(sigma2)
    return _assemble(series, order, coefficients, mean, output, sigma2, loglik, converged=True)


def refilter(fitted: SarimaFit, series: Series) -> SarimaFit:
    """Re-run the filter at fixed parameters on a (typically extended) series."""
    return apply(series, fitted.order, fitted.coefficients, fitted.mean, fitted.sigma2)


# ---------------------------------------------------------------------------
# Simulation and forecasting
# ---------------------------------------------------------------------------

def simulate(
    order: SarimaOrder,
    coefficients: SarimaCoefficients,
    mean: Optional[float] = None,
    sigma2: float = 1.0,
    n: int = 1000,
    burn_in: Optional[int] = None,
    seed: Optional[int] = None,
    start: datetime = SIMULATION_START,
) -> Series:
    """Draw a Gaussian seasonal ARIMA path.

    The expanded stationary ARMA is simulated from zero initial conditions, the
    burn-in is dropped, the mean is added and the result is integrated d times
    and D times at lag s.

    Raises:
        ModelError: On inadmissible coefficients, negative sigma2 or n < 1
    """
    if n < 1:
        raise ModelError(f"Simulation length must be positive, got: {n}")
    if sigma2 < 0:
        raise ModelError(f"sigma2 must be non-negative, got: {sigma2}")
    check_coefficients(coefficients, order)

    ar_poly, ma_poly = expand_polynomials(coefficients, order.s)
    if burn_in is None:
        burn_in = max(100, 10 * max(ar_poly.size, ma_poly.size))
    if burn_in < 0:
        raise ModelError(f"burn_in must be non-negative, got: {burn_in}")

    rng = np.random.default_rng(seed)
    shocks = rng.normal(0.0, math.sqrt(sigma2), size=n + burn_in)
    w = signal.lfilter(ma_poly, ar_poly, shocks)[burn_in:]
    if mean is not None:
        w = w + mean
    values = signal.lfilter([1.0], integration_polynomial(order), w)
    return Series(start, values, label=f"simulated {order.label}")


def psi_weights(fitted: SarimaFit, h: int) -> np.ndarray:
    """psi_0..psi_{h-1} of the integrated model's infinite MA representation."""
    ar_poly, ma_poly = expand_polynomials(fitted.coefficients, fitted.order.s)
    impulse = np.zeros(h)
    impulse[0] = 1.0
    return signal.lfilter(ma_poly, np.convolve(ar_poly, integration_polynomial(fitted.order)), impulse)


def forecast(
    fitted: SarimaFit,
    h: int,
    levels: Sequence[float] = config.DEFAULT_LEVELS,
) -> Forecast:
    """Point forecasts and normal prediction intervals h steps past the training window.

    Args:
        fitted: Fitted (or loaded) model
        h: Horizon
        levels: Confidence levels in (0, 1)

    Returns:
        Forecast with se_h = sigma * sqrt(sum of squared psi-weights)

    Raises:
        ModelError: If h < 1 or levels are invalid
    """
    if h < 1:
        raise ModelError(f"Forecast horizon must be at least 1, got: {h}")
    levels = validate_levels(levels)

    ar_poly, ma_poly = expand_polynomials(fitted.coefficients, fitted.order.s)
    state = np.array(fitted.state, dtype=float)
    r = state.size
    if r != max(ar_poly.size - 1, ma_poly.size):
        raise ModelError(f"Filter state of size {r} does not match {fitted.label}")
    a = np.zeros(r)
    a[:ar_poly.size - 1] = -ar_poly[1:]
    z = np.zeros(r)
    z[0] = 1.0
    z[1:ma_poly.size] = ma_poly[1:]

    mean = fitted.mean if fitted.mean is not None else 0.0
    w_hat = np.empty(h)
    for i in range(h):
        w_hat[i] = mean + z @ state
        state = np.concatenate([[a @ state], state[:-1]])

    delta = integration_polynomial(fitted.order)
    if delta.size > 1:
        zi = signal.lfiltic([1.0], delta, np.asarray(fitted.history, dtype=float)[::-1])
        points, _ = signal.lfilter([1.0], delta, w_hat, zi=zi)
    else:
        points = w_hat

    se = math.sqrt(fitted.sigma2) * np.sqrt(np.cumsum(psi_weights(fitted, h) ** 2))
    lower, upper = {}, {}
    for level in levels:
        half_width = normal_quantile((1.0 + level) / 2.0) * se
        lower[level] = points - half_width
        upper[level] = points + half_width

    return Forecast(
        start=fitted.train_end + fitted.step,
        step=fitted.step,
        points=np.asarray(points, dtype=float),
        levels=levels,
        lower=lower,
        upper=upper,
        se=se,
        model_name=fitted.label,
    )
