"""Special functions, quantiles and the Nelder-Mead minimiser shared by estimators."""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, special

from . import config
from .models import OptimResult

logger = logging.getLogger(__name__)


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0:
        raise ValueError(f"ln_gamma requires x > 0, got: {x}")
    return float(special.gammaln(x))


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail probability of a chi-square variable with df degrees of freedom.

    Computed as the regularised upper incomplete gamma Q(df/2, x/2).
    """
    if x < 0:
        raise ValueError(f"chi_square_sf requires x >= 0, got: {x}")
    if df < 1:
        raise ValueError(f"chi_square_sf requires df >= 1, got: {df}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"normal_quantile requires 0 < p < 1, got: {p}")
    return float(special.ndtri(p))


def normal_cdf(z):
    """Standard normal CDF (scalar or array)."""
    return special.ndtr(z)


def minimize(
    objective: Callable[[np.ndarray], float],
    start: Sequence[float],
    xatol: float = config.OPTIMIZER_XATOL,
    fatol: float = config.OPTIMIZER_FATOL,
    max_iterations: int = config.OPTIMIZER_MAX_ITERATIONS,
    initial_step: Optional[float] = None,
) -> OptimResult:
    """Nelder-Mead simplex descent.

    Converges when the simplex diameter is below `xatol` and the spread of
    objective values below `fatol`. Non-finite objective values are treated as
    +inf, so the returned vertex is never worse than the start.

    Args:
        objective: Function of a parameter vector
        start: Starting parameter vector
        xatol: Simplex-size tolerance
        fatol: Objective-spread tolerance
        max_iterations: Iteration budget
        initial_step: Optional absolute edge length of the initial simplex

    Returns:
        OptimResult with the best vertex seen

    Raises:
        ValueError: If the objective is not finite at the start point
    """
    start = np.atleast_1d(np.asarray(start, dtype=float))
    start_value = objective(start)
    if not np.isfinite(start_value):
        raise ValueError(f"Objective is not finite at the start point ({start_value})")

    def guarded(params):
        value = objective(params)
        return value if np.isfinite(value) else math.inf

    options = {"xatol": xatol, "fatol": fatol, "maxiter": max_iterations}
    if initial_step is not None:
        simplex = np.vstack([start, start + initial_step * np.eye(start.size)])
        options["initial_simplex"] = simplex

    result = optimize.minimize(guarded, start, method="Nelder-Mead", options=options)

    argmin, value = np.asarray(result.x, dtype=float), float(result.fun)
    if value > start_value:
        argmin, value = start, float(start_value)

    converged = bool(result.success) and result.nit <= max_iterations
    if not converged:
        logger.debug(f"Nelder-Mead stopped after {result.nit} iterations: {result.message}")

    return OptimResult(argmin=argmin, objective=value, iterations=int(result.nit), converged=converged)
