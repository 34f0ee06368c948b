"""Series construction, differencing, splitting and CSV ingestion."""

import logging
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd

from . import config
from .models import HOUR, Series, SeriesError, SplitSpec, format_timestamp, to_utc

logger = logging.getLogger(__name__)


def from_records(
    records: Iterable[Tuple[datetime, float]],
    step: timedelta = HOUR,
    gap_policy: str = "error",
    label: str = "",
) -> Series:
    """Build a gap-free series from (timestamp, value) records.

    Args:
        records: Pairs of timestamp and value, in any order
        step: Grid spacing
        gap_policy: 'error', 'zero_fill' or 'linear_interpolate'
        label: Series label

    Returns:
        Series covering the first to the last record

    Raises:
        SeriesError: On empty input, off-grid or duplicate timestamps, or a gap under 'error'
    """
    if gap_policy not in config.GAP_POLICIES:
        raise SeriesError(f"Unknown gap policy '{gap_policy}', expected one of {config.GAP_POLICIES}")

    pairs = sorted(((to_utc(ts), float(value)) for ts, value in records), key=lambda pair: pair[0])
    if not pairs:
        raise SeriesError("Cannot build a series from empty input")

    start = pairs[0][0]
    if step % HOUR == timedelta(0) and (start.minute or start.second or start.microsecond):
        raise SeriesError(f"Timestamp {start.isoformat()} is not on the hourly grid")

    indices = []
    for timestamp, _ in pairs:
        offset = timestamp - start
        if offset % step != timedelta(0):
            raise SeriesError(f"Timestamp {timestamp.isoformat()} is not on the step grid")
        indices.append(offset // step)

    indices = np.array(indices, dtype=int)
    if np.any(np.diff(indices) == 0):
        duplicate = pairs[int(np.flatnonzero(np.diff(indices) == 0)[0]) + 1][0]
        raise SeriesError(f"Duplicate timestamp {duplicate.isoformat()}")

    known = np.array([value for _, value in pairs], dtype=float)
    length = int(indices[-1]) + 1
    missing = length - indices.size

    if missing == 0:
        values = known
    elif gap_policy == "error":
        first_gap = int(np.flatnonzero(np.diff(indices) > 1)[0])
        gap_at = start + (int(indices[first_gap]) + 1) * step
        raise SeriesError(f"Gap in series at {gap_at.isoformat()} ({missing} missing values)")
    elif gap_policy == "zero_fill":
        values = np.zeros(length)
        values[indices] = known
    else:
        values = np.interp(np.arange(length), indices, known)

    if missing:
        logger.info(f"Filled {missing} missing values using policy '{gap_policy}'")

    return Series(start, values, step, label)


def difference(series: Series, lag: int = 1, times: int = 1) -> Series:
    """Apply (1 - B^lag)^times.

    The result is shorter by lag * times and starts lag * times steps later.

    Raises:
        SeriesError: If the series is too short
    """
    if lag < 1:
        raise SeriesError(f"Difference lag must be positive, got: {lag}")
    if times < 0:
        raise SeriesError(f"Difference count must be non-negative, got: {times}")
    if times == 0:
        return series
    if len(series) <= lag * times:
        raise SeriesError(
            f"Series of length {len(series)} is too short to difference {times} time(s) at lag {lag}"
        )

    values = np.asarray(series.values)
    for _ in range(times):
        values = values[lag:] - values[:-lag]
    return series.with_values(values, offset=lag * times)


def split(series: Series, spec: SplitSpec) -> Tuple[Series, Series]:
    """Split into (train, test); the test part starts at the boundary.

    Raises:
        SeriesError: If either part would be empty
    """
    boundary = spec.boundary
    index = boundary if isinstance(boundary, (int, np.integer)) else series.index_of(boundary)
    if not 1 <= index <= len(series) - 1:
        raise SeriesError(
            f"Split boundary {index} must lie strictly inside the series (1..{len(series) - 1})"
        )
    return series.slice(0, int(index)), series.slice(int(index))


def concatenate(first: Series, second: Series) -> Series:
    """Join two adjacent series on the same grid."""
    if first.step != second.step:
        raise SeriesError("Cannot concatenate series with different steps")
    if second.start != first.end + first.step:
        raise SeriesError(
            f"Series are not adjacent: {format_timestamp(first.end)} then {format_timestamp(second.start)}"
        )
    return Series(first.start, np.concatenate([first.values, second.values]), first.step, first.label)


def aggregate(series: Series, factor: int) -> Series:
    """Sum consecutive blocks of `factor` values (e.g. hourly to daily totals).

    An incomplete trailing block is dropped.
    """
    if factor < 1:
        raise SeriesError(f"Aggregation factor must be positive, got: {factor}")
    blocks = len(series) // factor
    if blocks == 0:
        raise SeriesError(f"Series of length {len(series)} is shorter than one block of {factor}")
    values = np.asarray(series.values[:blocks * factor]).reshape(blocks, factor).sum(axis=1)
    return Series(series.start, values, series.step * factor, series.label)


def read_series_csv(
    path: Union[str, Path],
    column: str = "value",
    step: timedelta = HOUR,
    gap_policy: str = "error",
) -> Series:
    """Read a `timestamp,<column>` CSV into a Series.

    Raises:
        FileNotFoundError: If the file does not exist
        SeriesError: If the content is malformed
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Series file not found: {path}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    for required in ("timestamp", column):
        if required not in frame.columns:
            raise SeriesError(f"{path}: missing column '{required}' (found {list(frame.columns)})")

    timestamps = pd.to_datetime(frame["timestamp"], format=config.TIMESTAMP_FORMAT, errors="coerce", utc=True)
    if timestamps.isna().any():
        bad = frame["timestamp"][timestamps.isna()].iloc[0]
        raise SeriesError(f"{path}: invalid timestamp '{bad}', expected YYYY-MM-DDTHH:MM:SS")

    values = pd.to_numeric(frame[column], errors="coerce")
    if values.isna().any():
        bad_row = int(np.flatnonzero(values.isna().to_numpy())[0])
        raise SeriesError(f"{path}: non-numeric value in column '{column}' at row {bad_row + 1}")

    records = zip([ts.to_pydatetime() for ts in timestamps], values.to_numpy(dtype=float))
    return from_records(records, step=step, gap_policy=gap_policy, label=path.stem)


def series_frame(series: Series, column: str = "value") -> pd.DataFrame:
    """Two-column frame in the CSV layout."""
    return pd.DataFrame({
        "timestamp": [format_timestamp(ts) for ts in series.timestamps()],
        column: series.values,
    })


def write_series_csv(series: Series, path: Union[str, Path]) -> Path:
    """Write a Series in the `timestamp,value` CSV layout."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    series_frame(series).to_csv(path, index=False, lineterminator="\n")
    return path
