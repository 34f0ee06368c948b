"""Stationarity, whiteness and normality tests plus ACF/PACF.

Every test returns a TestResult whose inference text follows the wording of
the model-evaluation table the pipeline reports:

    Jarque-Bera / Anderson-Darling  -> "Rejects the null hypothesis of normality"
    Box-Ljung                       -> "No significant autocorrelation"
    Augmented Dickey-Fuller         -> "Rejects the null hypothesis of non-stationarity"

Dickey-Fuller and KPSS p-values are interpolated in embedded critical-value
tables and clamped (with `p_clamped` set) at the table edges.
"""

import logging
import math
from typing import Literal, Optional, Union

import numpy as np
from scipy import special

from . import config
from .models import CorrelogramResult, DiagnosticError, Series, TestResult
from .numeric import chi_square_sf

logger = logging.getLogger(__name__)

Trend = Literal["constant", "constant_and_trend"]

NORMALITY_REJECTED = "Rejects the null hypothesis of normality"
NORMALITY_CONSISTENT = "Consistent with normality"
AUTOCORRELATION_ABSENT = "No significant autocorrelation"
AUTOCORRELATION_PRESENT = "Significant autocorrelation"
UNIT_ROOT_REJECTED = "Rejects the null hypothesis of non-stationarity"
UNIT_ROOT_RETAINED = "Fails to reject the null hypothesis of non-stationarity"
STATIONARITY_REJECTED = "Rejects the null hypothesis of stationarity"
STATIONARITY_RETAINED = "Fails to reject the null hypothesis of stationarity"

# Dickey-Fuller tau percentiles by sample size (rows) and lower-tail probability (columns)
DF_SAMPLE_SIZES = np.array([25, 50, 100, 250, 500, 100000], dtype=float)
DF_PROBABILITIES = np.array([0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99])
DF_TAU_CONSTANT = np.array([
    [-3.75, -3.33, -3.00, -2.63, -0.37, 0.00, 0.34, 0.72],
    [-3.58, -3.22, -2.93, -2.60, -0.40, -0.03, 0.29, 0.66],
    [-3.51, -3.17, -2.89, -2.58, -0.42, -0.05, 0.26, 0.63],
    [-3.46, -3.14, -2.88, -2.57, -0.42, -0.06, 0.24, 0.62],
    [-3.44, -3.13, -2.87, -2.57, -0.43, -0.07, 0.24, 0.61],
    [-3.43, -3.12, -2.86, -2.57, -0.44, -0.07, 0.23, 0.60],
])
DF_TAU_TREND = np.array([
    [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
    [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
    [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
    [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
    [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
    [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
])

# KPSS level-stationarity critical values and their upper-tail probabilities
KPSS_CRITICAL_VALUES = np.array([0.347, 0.463, 0.574, 0.739])
KPSS_PROBABILITIES = np.array([0.10, 0.05, 0.025, 0.01])


def _values(data: Union[Series, np.ndarray]) -> np.ndarray:
    if isinstance(data, Series):
        return np.asarray(data.values, dtype=float)
    return np.asarray(data, dtype=float)


def _result(
    name: str,
    statistic: float,
    p_value: float,
    parameter: int,
    alpha: float,
    reject_text: str,
    retain_text: str,
    p_clamped: bool = False,
) -> TestResult:
    p_value = float(min(max(p_value, 0.0), 1.0))
    reject = p_value < alpha
    return TestResult(
        test_name=name,
        statistic=float(statistic),
        p_value=p_value,
        df_or_bandwidth=int(parameter),
        alpha=alpha,
        reject_null=reject,
        inference=reject_text if reject else retain_text,
        p_clamped=p_clamped,
    )


def _autocorrelations(values: np.ndarray, max_lag: int) -> np.ndarray:
    n = values.size
    if max_lag < 1:
        raise DiagnosticError(f"max_lag must be positive, got: {max_lag}")
    if max_lag >= n:
        raise DiagnosticError(f"max_lag ({max_lag}) must be smaller than the series length ({n})")
    centered = values - values.mean()
    denominator = float(centered @ centered)
    if denominator <= 0.0:
        raise DiagnosticError("Autocorrelation is undefined for a zero-variance series")
    return np.array([centered[k:] @ centered[:-k] for k in range(1, max_lag + 1)]) / denominator


def acf(series: Union[Series, np.ndarray], max_lag: int) -> CorrelogramResult:
    """Sample autocorrelations r_1..r_max_lag (divisor-n convention).

    Raises:
        DiagnosticError: On a zero-variance series or max_lag >= n
    """
    values = _values(series)
    coefficients = _autocorrelations(values, max_lag)
    n = values.size
    return CorrelogramResult(
        lags=np.arange(1, max_lag + 1),
        coefficients=coefficients,
        band=config.CORRELOGRAM_Z / math.sqrt(n),
        n=n,
    )


def durbin_levinson(autocorrelations: np.ndarray) -> np.ndarray:
    """Partial autocorrelations phi_kk from r_1..r_K.

    Raises:
        DiagnosticError: If the recursion breaks down (|phi_kk| > 1)
    """
    r = np.asarray(autocorrelations, dtype=float)
    partial = np.empty(r.size)
    phi = np.zeros(0)
    for k in range(r.size):
        if k == 0:
            phi_kk = r[0]
        else:
            denominator = 1.0 - phi @ r[:k]
            if denominator <= 0.0:
                raise DiagnosticError(f"Durbin-Levinson recursion broke down at lag {k + 1}")
            phi_kk = (r[k] - phi @ r[k - 1::-1]) / denominator
        if abs(phi_kk) > 1.0 + 1e-12:
            raise DiagnosticError(f"Degenerate input: partial autocorrelation {phi_kk:.4f} at lag {k + 1}")
        phi = np.concatenate([phi - phi_kk * phi[::-1], [phi_kk]])
        partial[k] = phi_kk
    return partial


def pacf(series: Union[Series, np.ndarray], max_lag: int) -> CorrelogramResult:
    """Partial autocorrelations via the Durbin-Levinson recursion on the ACF."""
    result = acf(series, max_lag)
    return CorrelogramResult(
        lags=result.lags,
        coefficients=durbin_levinson(result.coefficients),
        band=result.band,
        n=result.n,
    )


def portmanteau_statistic(coefficients: np.ndarray, n: int) -> float:
    """Ljung-Box Q = n(n+2) * sum_k r_k^2 / (n - k) over the given lags 1..h."""
    r = np.asarray(coefficients, dtype=float)
    lags = np.arange(1, r.size + 1)
    return float(n * (n + 2) * np.sum(r ** 2 / (n - lags)))


def default_ljung_box_lags(n: int, s: int = 0) -> int:
    """Default h: 2s for seasonal series, min(10, n/5) otherwise (never beyond n/5 or below 1)."""
    h = 2 * s if s >= 2 else 10
    return max(1, min(h, n // 5))


def ljung_box(
    residuals: Union[Series, np.ndarray],
    h: int,
    fitted_params: int = 0,
    alpha: float = config.ALPHA,
) -> TestResult:
    """Box-Ljung portmanteau test of residual whiteness.

    Raises:
        DiagnosticError: If h >= n or h <= fitted_params
    """
    values = _values(residuals)
    n = values.size
    if h >= n:
        raise DiagnosticError(f"Ljung-Box lag count h={h} must be smaller than n={n}")
    if h <= fitted_params:
        raise DiagnosticError(
            f"Ljung-Box lag count h={h} must exceed the fitted parameter count ({fitted_params})"
        )

    q = portmanteau_statistic(_autocorrelations(values, h), n)
    df = h - fitted_params
    return _result(
        "Box-Ljung test", q, chi_square_sf(q, df), df, alpha,
        AUTOCORRELATION_PRESENT, AUTOCORRELATION_ABSENT,
    )


def _central_moments(values: np.ndarray, minimum_n: int) -> tuple:
    n = values.size
    if n < minimum_n:
        raise DiagnosticError(f"At least {minimum_n} observations are required, got: {n}")
    centered = values - values.mean()
    m2 = float(np.mean(centered ** 2))
    if m2 <= 0.0:
        raise DiagnosticError("Normality tests are undefined for a zero-variance series")
    return centered, m2


def jarque_bera(residuals: Union[Series, np.ndarray], alpha: float = config.ALPHA) -> TestResult:
    """Jarque-Bera normality test from sample skewness and kurtosis."""
    values = _values(residuals)
    centered, m2 = _central_moments(values, 4)
    n = values.size
    skewness = float(np.mean(centered ** 3)) / m2 ** 1.5
    kurtosis = float(np.mean(centered ** 4)) / m2 ** 2
    statistic = n / 6.0 * (skewness ** 2 + (kurtosis - 3.0) ** 2 / 4.0)
    return _result(
        "Jarque-Bera test", statistic, chi_square_sf(statistic, 2), 2, alpha,
        NORMALITY_REJECTED, NORMALITY_CONSISTENT,
    )


def _anderson_darling_p_value(corrected: float) -> float:
    if corrected < 0.2:
        return 1.0 - math.exp(-13.436 + 101.14 * corrected - 223.73 * corrected ** 2)
    if corrected < 0.34:
        return 1.0 - math.exp(-8.318 + 42.796 * corrected - 59.938 * corrected ** 2)
    if corrected < 0.6:
        return math.exp(0.9177 - 4.279 * corrected - 1.38 * corrected ** 2)
    # exp of a large argument overflows past A*2 ~ 150; the p-value is 0 there anyway
    return math.exp(min(1.2937 - 5.709 * corrected + 0.0186 * corrected ** 2, 0.0))


def anderson_darling(residuals: Union[Series, np.ndarray], alpha: float = config.ALPHA) -> TestResult:
    """Anderson-Darling normality test with estimated mean and variance.

    The statistic carries the small-sample correction (1 + 0.75/n + 2.25/n^2);
    standardised values are clamped to +/-8 and the clamp is flagged.
    """
    values = _values(residuals)
    _central_moments(values, 8)
    n = values.size
    z = np.sort((values - values.mean()) / values.std(ddof=1))
    clamped = bool(np.any(np.abs(z) > 8.0))
    z = np.clip(z, -8.0, 8.0)

    i = np.arange(1, n + 1)
    log_cdf = special.log_ndtr(z)
    log_sf = special.log_ndtr(-z[::-1])
    a2 = -n - np.mean((2 * i - 1) * (log_cdf + log_sf))
    corrected = a2 * (1.0 + 0.75 / n + 2.25 / n ** 2)
    if clamped:
        logger.debug("Anderson-Darling: standardised values clamped to +/-8")

    return _result(
        "Anderson-Darling normality test", corrected, _anderson_darling_p_value(corrected), n, alpha,
        NORMALITY_REJECTED, NORMALITY_CONSISTENT, p_clamped=clamped,
    )


def _ols_t_ratio(design: np.ndarray, target: np.ndarray, column: int) -> float:
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DiagnosticError("Singular regression matrix in unit-root regression")
    coefficients, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    residual = target - design @ coefficients
    dof = design.shape[0] - design.shape[1]
    sigma2 = float(residual @ residual) / dof
    covariance = sigma2 * np.linalg.inv(design.T @ design)
    return float(coefficients[column] / math.sqrt(covariance[column, column]))


def adf_test(
    series: Union[Series, np.ndarray],
    lag_order: Optional[int] = None,
    trend: Trend = "constant_and_trend",
    alpha: float = config.ALPHA,
) -> TestResult:
    """Augmented Dickey-Fuller unit-root test.

    Regresses dy_t on a constant (and trend), y_{t-1} and l lagged differences,
    with l = floor((n-1)^(1/3)) by default. The statistic is the t-ratio on
    y_{t-1}; its p-value is interpolated in the Dickey-Fuller tau table and
    clamped to [0.01, 0.99].

    Raises:
        DiagnosticError: If the series is too short or the regression is singular
    """
    if trend not in ("constant", "constant_and_trend"):
        raise DiagnosticError(f"Unknown ADF trend case '{trend}'")
    y = _values(series)
    n = y.size
    lags = int(math.floor((n - 1) ** (1.0 / 3.0))) if lag_order is None else int(lag_order)
    if lags < 0:
        raise DiagnosticError(f"ADF lag order must be non-negative, got: {lags}")
    if n <= lags + 10:
        raise DiagnosticError(f"ADF needs more than {lags + 10} observations, got: {n}")

    dy = np.diff(y)
    rows = np.arange(lags, dy.size)
    columns = [np.ones(rows.size)]
    if trend == "constant_and_trend":
        columns.append(rows + 1.0)
    columns.append(y[rows])
    level_column = len(columns) - 1
    for i in range(1, lags + 1):
        columns.append(dy[rows - i])
    design = np.column_stack(columns)

    statistic = _ols_t_ratio(design, dy[rows], level_column)

    table = DF_TAU_TREND if trend == "constant_and_trend" else DF_TAU_CONSTANT
    quantiles = np.array([
        np.interp(dy.size, DF_SAMPLE_SIZES, table[:, j]) for j in range(DF_PROBABILITIES.size)
    ])
    p_value = float(np.interp(statistic, quantiles, DF_PROBABILITIES))
    clamped = bool(statistic <= quantiles[0] or statistic >= quantiles[-1])

    return _result(
        "Augmented Dickey-Fuller test", statistic, p_value, lags, alpha,
        UNIT_ROOT_REJECTED, UNIT_ROOT_RETAINED, p_clamped=clamped,
    )


def kpss_test(
    series: Union[Series, np.ndarray],
    bandwidth: Optional[int] = None,
    alpha: float = config.ALPHA,
) -> TestResult:
    """KPSS level-stationarity test (null: stationary).

    Uses the Newey-West long-run variance with a Bartlett kernel and default
    bandwidth floor(4 (n/100)^(1/4)); p-values are interpolated between the
    10%, 5%, 2.5% and 1% critical values and clamped to [0.01, 0.10].
    """
    y = _values(series)
    n = y.size
    if n < 20:
        raise DiagnosticError(f"KPSS needs at least 20 observations, got: {n}")
    lags = int(math.floor(4.0 * (n / 100.0) ** 0.25)) if bandwidth is None else int(bandwidth)
    if not 0 <= lags < n:
        raise DiagnosticError(f"KPSS bandwidth must lie in [0, {n - 1}], got: {lags}")

    residual = y - y.mean()
    partial_sums = np.cumsum(residual)
    long_run_variance = float(residual @ residual) / n
    for s in range(1, lags + 1):
        weight = 1.0 - s / (lags + 1.0)
        long_run_variance += 2.0 * weight * float(residual[s:] @ residual[:-s]) / n
    if long_run_variance <= 0.0:
        raise DiagnosticError("KPSS long-run variance is not positive (constant series?)")

    statistic = float(partial_sums @ partial_sums) / (n ** 2 * long_run_variance)
    p_value = float(np.interp(statistic, KPSS_CRITICAL_VALUES, KPSS_PROBABILITIES))
    clamped = bool(statistic <= KPSS_CRITICAL_VALUES[0] or statistic >= KPSS_CRITICAL_VALUES[-1])

    return _result(
        "KPSS test", statistic, p_value, lags, alpha,
        STATIONARITY_REJECTED, STATIONARITY_RETAINED, p_clamped=clamped,
    )
