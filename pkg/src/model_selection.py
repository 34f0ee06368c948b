"""Automatic seasonal ARIMA order selection by AIC/BIC."""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, Optional, Tuple

from . import config, sarima
from .decomposition import classical_decompose, seasonal_strength
from .diagnostics import kpss_test
from .models import ConvergenceError, DiagnosticError, ModelError, SarimaFit, SarimaOrder, Series
from .series import difference

logger = logging.getLogger(__name__)

Criterion = Literal["aic", "bic"]
Strategy = Literal["stepwise", "full_grid"]
Candidate = Tuple[int, int, int, int]  # (p, q, P, Q)

STEPWISE_STARTS: Tuple[Candidate, ...] = ((2, 2, 1, 1), (0, 0, 0, 0), (1, 0, 1, 0), (0, 1, 0, 1))


@dataclass(frozen=True)
class SearchBounds:
    """Upper bounds of the order search.

    The defaults keep stepwise search fast; the widest accepted grid is
    p, q <= 24 and d <= 4 (P, Q <= 5, D <= 1).
    """
    max_p: int = config.DEFAULT_MAX_P
    max_q: int = config.DEFAULT_MAX_Q
    max_P: int = config.DEFAULT_MAX_SEASONAL_P
    max_Q: int = config.DEFAULT_MAX_SEASONAL_Q
    max_d: int = config.DEFAULT_MAX_D
    max_D: int = config.DEFAULT_MAX_SEASONAL_D

    def __post_init__(self):
        limits = {
            "max_p": config.LIMIT_P,
            "max_q": config.LIMIT_Q,
            "max_P": config.LIMIT_SEASONAL_PQ,
            "max_Q": config.LIMIT_SEASONAL_PQ,
            "max_d": config.LIMIT_D,
            "max_D": config.LIMIT_SEASONAL_D,
        }
        for name, limit in limits.items():
            value = getattr(self, name)
            if not 0 <= value <= limit:
                raise ModelError(f"Search bound {name} must lie in [0, {limit}], got: {value}")

    def clip(self, candidate: Candidate, seasonal: bool) -> Candidate:
        p, q, P, Q = candidate
        if not seasonal:
            P = Q = 0
        return (min(p, self.max_p), min(q, self.max_q), min(P, self.max_P), min(Q, self.max_Q))

    def grid(self, seasonal: bool) -> List[Candidate]:
        seasonal_range_p = range(self.max_P + 1) if seasonal else range(1)
        seasonal_range_q = range(self.max_Q + 1) if seasonal else range(1)
        return list(itertools.product(
            range(self.max_p + 1), range(self.max_q + 1), seasonal_range_p, seasonal_range_q
        ))


def choose_seasonal_differencing(series: Series, s: int, max_D: int) -> int:
    """D = 1 when the seasonal strength of the raw series reaches the threshold."""
    if max_D < 1 or s < 2 or len(series) < 2 * s:
        return 0
    strength = seasonal_strength(classical_decompose(series, s))
    logger.info(f"Seasonal strength at period {s}: {strength:.3f}")
    return 1 if strength >= config.SEASONAL_STRENGTH_THRESHOLD else 0


def choose_differencing(series: Series, max_d: int, alpha: float = config.ALPHA) -> int:
    """Difference until KPSS fails to reject level stationarity (at most max_d times)."""
    d = 0
    current = series
    while d < max_d:
        try:
            result = kpss_test(current, alpha=alpha)
        except DiagnosticError as e:
            logger.debug(f"KPSS unavailable after {d} differences: {e}")
            break
        if not result.reject_null:
            break
        current = difference(current)
        d += 1
    return d


class _CandidateCache:
    """Fits each (p, q, P, Q) once; failed or non-converged fits are remembered as None."""

    def __init__(self, series: Series, d: int, D: int, s: int, criterion: Criterion, include_mean):
        self.series = series
        self.d, self.D, self.s = d, D, s
        self.criterion = criterion
        self.include_mean = include_mean
        self.fits: Dict[Candidate, Optional[SarimaFit]] = {}

    def order(self, candidate: Candidate) -> SarimaOrder:
        p, q, P, Q = candidate
        return SarimaOrder(p, self.d, q, P, self.D, Q, self.s if self.s >= 2 else 0)

    def _fit(self, candidate: Candidate) -> Optional[SarimaFit]:
        order = self.order(candidate)
        try:
            fitted = sarima.fit(
                self.series, order,
                include_mean=self.include_mean,
                xatol=config.SELECTION_XATOL,
                fatol=config.SELECTION_FATOL,
            )
        except ModelError as e:
            logger.debug(f"Skipping {order.label}: {e}")
            return None
        if not fitted.converged:
            logger.debug(f"Skipping {order.label}: not converged")
            return None
        logger.debug(f"{order.label}: aic={fitted.aic:.3f} bic={fitted.bic:.3f}")
        return fitted

    def evaluate(self, candidates: Iterable[Candidate], workers: int = 1) -> None:
        pending = [c for c in dict.fromkeys(candidates) if c not in self.fits]
        if workers > 1 and len(pending) > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(self._fit, pending))
        else:
            results = [self._fit(candidate) for candidate in pending]
        self.fits.update(zip(pending, results))

    def key(self, candidate: Candidate) -> tuple:
        fitted = self.fits[candidate]
        return (getattr(fitted, self.criterion), fitted.k, candidate)

    def best(self, candidates: Iterable[Candidate]) -> Optional[Candidate]:
        usable = [c for c in candidates if self.fits.get(c) is not None]
        return min(usable, key=self.key) if usable else None


def _neighbours(candidate: Candidate, bounds: SearchBounds, seasonal: bool) -> List[Candidate]:
    limits = (bounds.max_p, bounds.max_q, bounds.max_P if seasonal else 0, bounds.max_Q if seasonal else 0)
    moves = []
    for position, limit in enumerate(limits):
        for delta in (-1, 1):
            value = candidate[position] + delta
            if 0 <= value <= limit:
                moved = list(candidate)
                moved[position] = value
                moves.append(tuple(moved))
    return moves


def auto_select(
    series: Series,
    s: int,
    bounds: Optional[SearchBounds] = None,
    criterion: Criterion = "aic",
    strategy: Strategy = "stepwise",
    include_mean: sarima.MeanMode = "auto",
    workers: int = config.WORKERS,
    window: Optional[int] = config.SELECTION_WINDOW,
) -> SarimaFit:
    """Choose differencing orders, then search (p, q, P, Q) by information criterion.

    Differencing orders are chosen on the whole series. Candidates are ranked on
    the last `window` values with loose optimizer tolerances, and the winner is
    refitted on the whole series from the ranked estimate.

    Args:
        series: Training series
        s: Seasonal period (0 for non-seasonal)
        bounds: Search bounds (defaults when omitted)
        criterion: 'aic' or 'bic'
        strategy: 'stepwise' hill-climbing or exhaustive 'full_grid'
        include_mean: Mean handling passed to every candidate fit
        workers: Threads used to fit candidates concurrently
        window: Values used to rank candidates (None or 0 for the whole series)

    Returns:
        The criterion-minimal converged fit; ties go to fewer parameters, then
        to the lexicographically smaller (p, q, P, Q)

    Raises:
        ModelError: On invalid arguments
        ConvergenceError: If no candidate converges
    """
    bounds = bounds or SearchBounds()
    if criterion not in ("aic", "bic"):
        raise ModelError(f"Criterion must be 'aic' or 'bic', got: {criterion}")
    if strategy not in ("stepwise", "full_grid"):
        raise ModelError(f"Strategy must be 'stepwise' or 'full_grid', got: {strategy}")
    if s == 1 or s < 0:
        raise ModelError(f"Seasonal period must be 0 or at least 2, got: {s}")
    if window is not None and window < 0:
        raise ModelError(f"Selection window must be non-negative, got: {window}")

    seasonal = s >= 2
    D = choose_seasonal_differencing(series, s, bounds.max_D) if seasonal else 0
    seasonally_differenced = difference(series, lag=s, times=D) if D else series
    d = choose_differencing(seasonally_differenced, bounds.max_d)
    logger.info(f"Selected differencing d={d}, D={D}")

    ranking = series
    if window and len(series) > window:
        ranking = series.slice(len(series) - window, len(series))
        logger.info(f"Ranking candidates on the last {window} of {len(series)} values")
    cache = _CandidateCache(ranking, d, D, s, criterion, include_mean)

    if strategy == "full_grid":
        grid = bounds.grid(seasonal)
        if len(grid) > config.GRID_WARNING_SIZE:
            logger.warning(f"Full grid search over {len(grid)} candidate models; this may take a long time")
        cache.evaluate(grid, workers)
        best = cache.best(grid)
    else:
        starts = [bounds.clip(candidate, seasonal) for candidate in STEPWISE_STARTS]
        cache.evaluate(starts, workers)
        best = cache.best(starts)
        while best is not None:
            neighbours = _neighbours(best, bounds, seasonal)
            cache.evaluate(neighbours, workers)
            challenger = cache.best(neighbours)
            if challenger is None or cache.key(challenger) >= cache.key(best):
                break
            best = challenger

    if best is None:
        raise ConvergenceError(f"No candidate model converged ({len(cache.fits)} tried)")

    ranked = cache.fits[best]
    try:
        selected = sarima.fit(series, ranked.order, include_mean=include_mean, start=ranked.coefficients)
    except ModelError as e:
        raise ConvergenceError(f"Refit of {ranked.label} on the whole series failed: {e}") from e
    if not selected.converged:
        logger.warning(f"{selected.label}: refit on the whole series did not converge")
    logger.info(
        f"Selected {selected.label} by {criterion.upper()} = {getattr(selected, criterion):.3f} "
        f"after {len(cache.fits)} fits"
    )
    return selected
