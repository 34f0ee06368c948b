"""Data models and validation for series, tests, fitted models and forecasts."""

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union
import json

import numpy as np

from . import config

HOUR = timedelta(hours=1)

Variant = Literal["additive", "multiplicative"]


class ForecastingError(ValueError):
    """Base class for domain errors raised by the toolkit."""


class SeriesError(ForecastingError):
    """Invalid series input (gaps, duplicates, bad grid, too short)."""


class DiagnosticError(ForecastingError):
    """A statistical test cannot be computed for the given input."""


class ModelError(ForecastingError):
    """Invalid model specification or a model that cannot be estimated."""


class ConvergenceError(ModelError):
    """No candidate model could be estimated to convergence."""


def to_utc(timestamp: datetime) -> datetime:
    """Return the timestamp as an aware UTC datetime (naive input is taken as UTC)."""
    if timestamp.tzinfo is None:
        return timestamp.replace(tzinfo=timezone.utc)
    return timestamp.astimezone(timezone.utc)


def format_timestamp(timestamp: datetime) -> str:
    """Format a timestamp in the CSV/JSON wire format (UTC, no offset suffix)."""
    return to_utc(timestamp).strftime(config.TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    """Parse a wire-format timestamp into an aware UTC datetime."""
    try:
        parsed = datetime.strptime(text.strip(), config.TIMESTAMP_FORMAT)
    except ValueError as e:
        raise SeriesError(f"Invalid timestamp '{text}': expected YYYY-MM-DDTHH:MM:SS") from e
    return parsed.replace(tzinfo=timezone.utc)


def _frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Series:
    """Dense, fixed-step sequence of real observations.

    Attributes:
        start: Timestamp of the first value (UTC)
        values: Observations; timestamp of index i is start + i * step
        step: Fixed spacing between observations
        label: Free-text name carried into reports
    """
    start: datetime
    values: np.ndarray
    step: timedelta = HOUR
    label: str = ""

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 1 or values.size == 0:
            raise SeriesError("Series values must be a non-empty one-dimensional sequence")
        if not np.all(np.isfinite(values)):
            raise SeriesError("Series values must all be finite (no NaN or infinity)")
        if self.step <= timedelta(0):
            raise SeriesError(f"Series step must be positive, got: {self.step}")

        start = to_utc(self.start)
        if self.step % HOUR == timedelta(0):
            start = start.replace(minute=0, second=0, microsecond=0)

        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start", start)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def end(self) -> datetime:
        """Timestamp of the last observation."""
        return self.timestamp_at(len(self) - 1)

    def timestamp_at(self, index: int) -> datetime:
        return self.start + index * self.step

    def timestamps(self) -> List[datetime]:
        return [self.timestamp_at(i) for i in range(len(self))]

    def index_of(self, timestamp: datetime) -> int:
        """Return the grid index of a timestamp (may lie outside the stored range).

        Raises:
            SeriesError: If the timestamp is not on the series grid
        """
        offset = to_utc(timestamp) - self.start
        if offset % self.step != timedelta(0):
            raise SeriesError(f"Timestamp {format_timestamp(timestamp)} is not on the series grid")
        return offset // self.step

    def slice(self, start: int, stop: Optional[int] = None) -> "Series":
        """Return the sub-series [start, stop) with its timestamps preserved."""
        stop = len(self) if stop is None else stop
        if not 0 <= start < stop <= len(self):
            raise SeriesError(f"Invalid slice [{start}, {stop}) for series of length {len(self)}")
        return Series(self.timestamp_at(start), self.values[start:stop], self.step, self.label)

    def with_values(self, values, offset: int = 0, label: Optional[str] = None) -> "Series":
        """Return a series on the same grid, starting `offset` steps after this one."""
        return Series(
            self.timestamp_at(offset),
            values,
            self.step,
            self.label if label is None else label,
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/test boundary: the test part starts at `boundary` (index or timestamp)."""
    boundary: Union[int, datetime]


@dataclass(frozen=True)
class OptimResult:
    """Outcome of a derivative-free minimisation."""
    argmin: np.ndarray
    objective: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class TestResult:
    """One hypothesis test outcome with its report wording.

    Attributes:
        test_name: Human-readable test name
        statistic: Test statistic
        p_value: p-value in [0, 1]
        df_or_bandwidth: Degrees of freedom, lag order or bandwidth used
        alpha: Significance level
        reject_null: Whether p_value < alpha
        inference: Report wording for the decision
        p_clamped: True when the p-value sits at the edge of an interpolation table
    """
    __test__ = False  # not a pytest test class

    test_name: str
    statistic: float
    p_value: float
    df_or_bandwidth: int
    alpha: float
    reject_null: bool
    inference: str
    p_clamped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise DiagnosticError(f"p-value must lie in [0, 1], got: {self.p_value}")
        if self.reject_null != (self.p_value < self.alpha):
            raise DiagnosticError("reject_null must equal (p_value < alpha)")

    def to_row(self) -> dict:
        """Row layout of the diagnostic report."""
        return {
            "test": self.test_name,
            "statistic": float(self.statistic),
            "p_value": float(self.p_value),
            "p_clamped": bool(self.p_clamped),
            f"reject_at_{self.alpha:g}": bool(self.reject_null),
            "inference": self.inference,
            "parameter": int(self.df_or_bandwidth),
        }


@dataclass(frozen=True, eq=False)
class CorrelogramResult:
    """Autocorrelations (or partial autocorrelations) at lags 1..max_lag."""
    lags: np.ndarray
    coefficients: np.ndarray
    band: float
    n: int

    def to_dict(self) -> dict:
        return {
            "lags": [int(k) for k in self.lags],
            "coefficients": [float(c) for c in self.coefficients],
            "band": float(self.band),
            "n": int(self.n),
        }


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Additive decomposition; NaN marks the margins where the trend is undefined."""
    start: datetime
    step: timedelta
    period: int
    observed: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    remainder: np.ndarray
    seasonal_figure: np.ndarray

    def defined(self) -> np.ndarray:
        """Boolean mask of indices where the trend (and remainder) exist."""
        return ~np.isnan(self.trend)


@dataclass(frozen=True)
class SarimaOrder:
    """The (p,d,q)(P,D,Q)_s specification; s=0 means non-seasonal."""
    p: int
    d: int
    q: int
    P: int = 0
    D: int = 0
    Q: int = 0
    s: int = 0

    def __post_init__(self):
        for name in ("p", "d", "q", "P", "D", "Q", "s"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise ModelError(f"Order field '{name}' must be a non-negative integer, got: {value}")
        if self.s == 1:
            raise ModelError("Seasonal period must be 0 (non-seasonal) or at least 2")
        if self.s == 0 and (self.P or self.D or self.Q):
            raise ModelError("Seasonal orders P, D, Q require a seasonal period s >= 2")

    @classmethod
    def parse(cls, text: str) -> "SarimaOrder":
        """Parse 'p,d,q' or 'p,d,q,P,D,Q,s'."""
        try:
            fields = [int(part) for part in text.split(",")]
        except ValueError as e:
            raise ModelError(f"Invalid order '{text}': expected comma-separated integers") from e
        if len(fields) not in (3, 7):
            raise ModelError(f"Invalid order '{text}': expected p,d,q or p,d,q,P,D,Q,s")
        return cls(*fields)

    @property
    def n_coefficients(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def integration_span(self) -> int:
        """Observations consumed by differencing."""
        return self.d + self.D * self.s

    @property
    def label(self) -> str:
        text = f"ARIMA({self.p},{self.d},{self.q})"
        if self.s:
            text += f"({self.P},{self.D},{self.Q})[{self.s}]"
        return text

    def to_dict(self) -> dict:
        return {"p": self.p, "d": self.d, "q": self.q, "P": self.P, "D": self.D, "Q": self.Q, "s": self.s}


@dataclass(frozen=True)
class SarimaCoefficients:
    """Lag-polynomial coefficients: phi, theta, Phi, Theta.

    Sign convention: y_t = sum phi_i y_{t-i} + e_t + sum theta_j e_{t-j}.
    """
    ar: Tuple[float, ...] = ()
    ma: Tuple[float, ...] = ()
    seasonal_ar: Tuple[float, ...] = ()
    seasonal_ma: Tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("ar", "ma", "seasonal_ar", "seasonal_ma"):
            values = tuple(float(c) for c in getattr(self, name))
            if not all(np.isfinite(values)):
                raise ModelError(f"Coefficients '{name}' must be finite")
            object.__setattr__(self, name, values)

    def check(self, order: "SarimaOrder") -> "SarimaCoefficients":
        """Return self, or raise ModelError unless the array lengths match the order."""
        expected = {"ar": order.p, "ma": order.q, "seasonal_ar": order.P, "seasonal_ma": order.Q}
        for name, size in expected.items():
            if len(getattr(self, name)) != size:
                raise ModelError(f"Coefficient array '{name}' must have {size} entries for {order.label}")
        return self


@dataclass(frozen=True, eq=False)
class SarimaFit:
    """Fitted seasonal ARIMA model.

    The filter state (one-step-ahead state of the differenced process) and the
    raw history tail are what forecasting needs; residuals are absent on a fit
    loaded from a model file.
    """
    order: SarimaOrder
    ar: Tuple[float, ...]
    ma: Tuple[float, ...]
    seasonal_ar: Tuple[float, ...]
    seasonal_ma: Tuple[float, ...]
    mean: Optional[float]
    sigma2: float
    loglik: float
    aic: float
    bic: float
    n_effective: int
    converged: bool
    state: np.ndarray
    history: np.ndarray
    train_start: datetime
    train_end: datetime
    step: timedelta = HOUR
    residuals: Optional[Series] = None

    @property
    def k(self) -> int:
        """Parameter count used by AIC/BIC (sigma2 included)."""
        return self.order.n_coefficients + (1 if self.mean is not None else 0) + 1

    @property
    def label(self) -> str:
        return self.order.label

    @property
    def coefficients(self) -> SarimaCoefficients:
        return SarimaCoefficients(self.ar, self.ma, self.seasonal_ar, self.seasonal_ma)

    def to_dict(self) -> dict:
        """Serialisable model document (format version 1)."""
        return {
            "format_version": 1,
            "model": "sarima",
            "order": self.order.to_dict(),
            "coefficients": {
                "ar": [float(c) for c in self.ar],
                "ma": [float(c) for c in self.ma],
                "seasonal_ar": [float(c) for c in self.seasonal_ar],
                "seasonal_ma": [float(c) for c in self.seasonal_ma],
            },
            "mean": None if self.mean is None else float(self.mean),
            "sigma2": float(self.sigma2),
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "bic": float(self.bic),
            "n_effective": int(self.n_effective),
            "converged": bool(self.converged),
            "training_window": {
                "start": format_timestamp(self.train_start),
                "end": format_timestamp(self.train_end),
                "step_seconds": int(self.step.total_seconds()),
            },
            "state": {
                "filter_state": [float(v) for v in self.state],
                "history": [float(v) for v in self.history],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def validate_sarima_document(data: dict) -> SarimaFit:
    """Validate a model document and return the SarimaFit it describes.

    Args:
        data: Dictionary loaded from a model JSON file

    Returns:
        SarimaFit without residuals

    Raises:
        ModelError: If the document is malformed or of an unknown version
    """
    required_fields = [
        "format_version", "order", "coefficients", "mean", "sigma2", "loglik",
        "aic", "bic", "n_effective", "training_window", "state"
    ]
    missing = [f for f in required_fields if f not in data]
    if missing:
        raise ModelError(f"Model document is missing fields: {missing}")
    if data["format_version"] != 1:
        raise ModelError(f"Unsupported model format_version: {data['format_version']}")
    if data.get("model", "sarima") != "sarima":
        raise ModelError(f"Unsupported model type: {data.get('model')}")

    try:
        order = SarimaOrder(**data["order"])
    except TypeError as e:
        raise ModelError(f"Invalid order in model document: {data['order']}") from e
    coefficients = data["coefficients"]
    parsed = SarimaCoefficients(
        coefficients.get("ar", []),
        coefficients.get("ma", []),
        coefficients.get("seasonal_ar", []),
        coefficients.get("seasonal_ma", []),
    ).check(order)

    sigma2 = float(data["sigma2"])
    if not sigma2 > 0:
        raise ModelError(f"sigma2 must be positive, got: {sigma2}")

    window = data["training_window"]
    history = np.array(data["state"]["history"], dtype=float)
    if history.size != order.integration_span:
        raise ModelError(f"History must hold {order.integration_span} values, got: {history.size}")

    return SarimaFit(
        order=order,
        ar=parsed.ar,
        ma=parsed.ma,
        seasonal_ar=parsed.seasonal_ar,
        seasonal_ma=parsed.seasonal_ma,
        mean=None if data["mean"] is None else float(data["mean"]),
        sigma2=sigma2,
        loglik=float(data["loglik"]),
        aic=float(data["aic"]),
        bic=float(data["bic"]),
        n_effective=int(data["n_effective"]),
        converged=bool(data.get("converged", True)),
        state=np.array(data["state"]["filter_state"], dtype=float),
        history=history,
        train_start=parse_timestamp(window["start"]),
        train_end=parse_timestamp(window["end"]),
        step=timedelta(seconds=int(window["step_seconds"])),
    )


@dataclass(frozen=True, eq=False)
class Forecast:
    """Horizon-indexed point forecasts with bounds per confidence level.

    Attributes:
        start: Timestamp of the first forecast step
        step: Spacing between forecast steps
        points: Point forecasts
        levels: Confidence levels in ascending order
        lower: Lower bounds keyed by level
        upper: Upper bounds keyed by level
        se: Per-step standard errors
        model_name: Label of the producing model
        approximate: True when intervals use a heuristic rather than model-based variance
    """
    start: datetime
    step: timedelta
    points: np.ndarray
    levels: Tuple[float, ...]
    lower: Dict[float, np.ndarray]
    upper: Dict[float, np.ndarray]
    se: np.ndarray
    model_name: str = ""
    approximate: bool = False

    @property
    def horizon(self) -> int:
        return int(self.points.size)

    def timestamps(self) -> List[datetime]:
        return [self.start + i * self.step for i in range(self.horizon)]


def validate_levels(levels: Sequence[float]) -> Tuple[float, ...]:
    """Return sorted, de-duplicated confidence levels.

    Raises:
        ModelError: If levels are empty or outside (0, 1)
    """
    if levels is None or len(levels) == 0:
        raise ModelError("At least one confidence level is required")
    cleaned = sorted({float(level) for level in levels})
    for level in cleaned:
        if not 0.0 < level < 1.0:
            raise ModelError(f"Confidence levels must lie in (0, 1), got: {level}")
    return tuple(cleaned)


@dataclass(frozen=True)
class HwState:
    """Holt-Winters level, trend and seasonal states."""
    level: float
    trend: float
    seasonal: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class HwModel:
    """Fitted Holt-Winters model; `n` counts the observations the states have absorbed."""
    period: int
    variant: Variant
    alpha: float
    beta: float
    gamma: float
    level: float
    trend: float
    seasonal: np.ndarray
    sse: float
    residuals: Series
    n: int

    @property
    def label(self) -> str:
        return f"HoltWinters({self.variant},{self.period})"


@dataclass(frozen=True, eq=False)
class NetworkWeights:
    """Single-hidden-layer network: tanh hidden units, linear output."""
    w_hidden: np.ndarray  # (hidden, inputs)
    b_hidden: np.ndarray  # (hidden,)
    w_out: np.ndarray     # (hidden,)
    b_out: float

    @property
    def hidden(self) -> int:
        return int(self.b_hidden.size)

    def flatten(self) -> np.ndarray:
        return np.concatenate([
            self.w_hidden.ravel(), self.b_hidden, self.w_out, [self.b_out]
        ])

    @classmethod
    def unflatten(cls, flat: np.ndarray, hidden: int, inputs: int) -> "NetworkWeights":
        flat = np.asarray(flat, dtype=float)
        cut = hidden * inputs
        return cls(
            w_hidden=flat[:cut].reshape(hidden, inputs),
            b_hidden=flat[cut:cut + hidden],
            w_out=flat[cut + hidden:cut + 2 * hidden],
            b_out=float(flat[cut + 2 * hidden]),
        )

    def permuted(self, order: Sequence[int]) -> "NetworkWeights":
        """Relabel hidden units; the network function is unchanged."""
        order = np.asarray(order)
        return NetworkWeights(self.w_hidden[order], self.b_hidden[order], self.w_out[order], self.b_out)

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """Network output for a (rows, inputs) matrix."""
        hidden = np.tanh(inputs @ self.w_hidden.T + self.b_hidden)
        return hidden @ self.w_out + self.b_out


@dataclass(frozen=True)
class MinMaxScaler:
    """Affine map of [minimum, maximum] onto [-1, 1]."""
    minimum: float
    maximum: float

    def __post_init__(self):
        if not self.maximum > self.minimum:
            raise ModelError("Degenerate scaling: series maximum equals its minimum")

    def scale(self, values):
        return 2.0 * (np.asarray(values, dtype=float) - self.minimum) / (self.maximum - self.minimum) - 1.0

    def unscale(self, values):
        return (np.asarray(values, dtype=float) + 1.0) * (self.maximum - self.minimum) / 2.0 + self.minimum


@dataclass(frozen=True, eq=False)
class NnarModel:
    """Ensemble of neural-network autoregressions on lagged values."""
    lags: int
    seasonal_lags: int
    s: int
    hidden: int
    networks: Tuple[NetworkWeights, ...]
    scaler: MinMaxScaler
    residuals: Series
    history: np.ndarray
    seed: int
    loss_history: Tuple[Tuple[float, ...], ...] = ()

    @property
    def input_lags(self) -> Tuple[int, ...]:
        lags = set(range(1, self.lags + 1))
        lags.update(self.s * k for k in range(1, self.seasonal_lags + 1))
        return tuple(sorted(lags))

    @property
    def label(self) -> str:
        if self.seasonal_lags:
            return f"NNAR({self.lags},{self.seasonal_lags},{self.hidden})[{self.s}]"
        return f"NNAR({self.lags},{self.hidden})"


@dataclass(frozen=True)
class OriginScore:
    """Scores of one forecast origin in a backtest."""
    origin: datetime
    me: float
    rmse: float
    n_points: int


@dataclass(frozen=True)
class EvalReport:
    """Pooled accuracy of a model over one or more forecast origins."""
    model_name: str
    me: float
    rmse: float
    coverage: Dict[float, float]
    n_points: int
    per_origin: Optional[List[OriginScore]] = None
    aic: Optional[float] = None

    def to_row(self, levels: Sequence[float] = config.DEFAULT_LEVELS) -> dict:
        """Row layout of the evaluation CSV (model, me, rmse, coverage_<pct>..., n)."""
        row = {"model": self.model_name, "me": self.me, "rmse": self.rmse}
        for level in levels:
            row[f"coverage_{level * 100:g}"] = self.coverage.get(level, float("nan"))
        row["n"] = self.n_points
        return row


@dataclass
class DiagnosticReport:
    """Diagnostic battery over the raw and differenced series (and residuals)."""
    series_label: str
    start: datetime
    end: datetime
    n: int
    step: timedelta
    differencing: Dict[str, int]
    rows: List[Tuple[str, TestResult]] = field(default_factory=list)
    correlograms: Dict[str, Dict[str, CorrelogramResult]] = field(default_factory=dict)
    residual_source: str = "differenced"

    def families(self) -> List[str]:
        return sorted({result.test_name for _, result in self.rows})

    def to_dict(self) -> dict:
        return {
            "report_version": 1,
            "series": {
                "label": self.series_label,
                "start": format_timestamp(self.start),
                "end": format_timestamp(self.end),
                "n": self.n,
                "step_seconds": int(self.step.total_seconds()),
            },
            "differencing": dict(self.differencing),
            "residual_source": self.residual_source,
            "tests": [dict(applied_to=role, **result.to_row()) for role, result in self.rows],
            "correlograms": {
                role: {name: result.to_dict() for name, result in tables.items()}
                for role, tables in self.correlograms.items()
            },
        }
