"""Gap filling, seasonal-lag features, min-max scaling, and the chronological split.

All functions are pure; scalers are always fitted on training data only and
reused for test/forecast transforms so no information leaks backwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSplitError, UnrecoverableSeriesError
from .series import TimeSeries

DEGENERATE_SPAN = 1e-12


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature min-max bounds; degenerate when the training spread vanishes."""

    vmin: float
    vmax: float
    degenerate: bool

    def __post_init__(self):
        if self.vmin > self.vmax:
            raise ValueError("vmin must not exceed vmax")


@dataclass(frozen=True)
class SplitPair:
    """Chronological train/test partition; train strictly precedes test."""

    train: TimeSeries
    test: TimeSeries
    split_index: int


def interpolate_linear(series: TimeSeries) -> TimeSeries:
    """Fill gaps by straight lines between present neighbors.

    Leading and trailing gaps are extended with the nearest present value
    rather than extrapolated, so no slope is invented outside the observed
    range. The result is fully present.
    """
    if not series.mask.any():
        raise UnrecoverableSeriesError("cannot interpolate an all-missing series")
    if series.fully_present:
        return series
    idx = np.flatnonzero(series.mask)
    filled = np.interp(np.arange(len(series)), idx, series.values[idx])
    return TimeSeries(series.start, filled)


def forward_fill_seasonal(series: TimeSeries, lag: int = 12) -> TimeSeries:
    """Derive the lag-`lag` feature series, forward-filling over gaps.

    Slot i carries the most recent present value at index <= i - lag, or is
    flagged missing when no such value exists. The input is untouched.
    """
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    n = len(series)
    carry = np.full(n, np.nan)
    carry_mask = np.zeros(n, dtype=bool)
    last = np.nan
    seen = False
    for i in range(n):
        if series.mask[i]:
            last = series.values[i]
            seen = True
        carry[i] = last
        carry_mask[i] = seen
    values = np.full(n, np.nan)
    mask = np.zeros(n, dtype=bool)
    if lag < n:
        values[lag:] = carry[: n - lag]
        mask[lag:] = carry_mask[: n - lag]
    return TimeSeries(series.start, values, mask)


def fit_minmax(train: TimeSeries) -> ScalerParams:
    """Min/max over the present training values."""
    present = train.present_values()
    if len(present) == 0:
        raise UnrecoverableSeriesError("cannot fit a scaler on an all-missing series")
    vmin = float(present.min())
    vmax = float(present.max())
    return ScalerParams(vmin, vmax, degenerate=(vmax - vmin) < DEGENERATE_SPAN)


def apply_minmax(x: np.ndarray, p: ScalerParams) -> np.ndarray:
    """(x - min) / (max - min); constant training data maps everything to 0.

    Values outside the training range are not clipped, so forecasts may
    legitimately fall outside [0, 1].
    """
    x = np.asarray(x, dtype=float)
    if p.degenerate:
        return np.zeros_like(x)
    return (x - p.vmin) / (p.vmax - p.vmin)


def invert_minmax(z: np.ndarray, p: ScalerParams) -> np.ndarray:
    """Inverse transform back to original units; degenerate params pin to vmin."""
    z = np.asarray(z, dtype=float)
    if p.degenerate:
        return np.full_like(z, p.vmin)
    return z * (p.vmax - p.vmin) + p.vmin


def chrono_split(series: TimeSeries, train_fraction: float = 0.8) -> SplitPair:
    """Order-preserving prefix/suffix split; train gets ceil(fraction * n) points.

    Ceiling on the train side keeps the test share at or below the requested
    fraction's complement, which pins down the rounding for spans like 72
    months (58 train / 14 test at 0.8).
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(series)
    if n < 2:
        raise InvalidSplitError("cannot split a series shorter than 2 points")
    # tiny epsilon guards against 0.8 * 60 landing at 48.000...01 in binary
    split = math.ceil(train_fraction * n - 1e-9)
    if split < 1 or split >= n:
        raise InvalidSplitError(
            f"split of {n} points at fraction {train_fraction} leaves an empty side"
        )
    train = TimeSeries(series.start, series.values[:split], series.mask[:split])
    test = TimeSeries(series.start.plus(split), series.values[split:], series.mask[split:])
    return SplitPair(train=train, test=test, split_index=split)
