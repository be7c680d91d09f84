"""Forecast accuracy metrics: MSE, RMSE, MAPE, and R-squared.

Metrics are always computed in original physical units. MAPE terms with a
near-zero actual are excluded and counted instead of blowing up, and R2 is
reported as undefined (None) on constant actuals; both situations are routine
in near-constant pollutant records.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

MAPE_ZERO_THRESHOLD = 1e-12
R2_VARIANCE_FLOOR = 1e-24


@dataclass(frozen=True)
class EvalReport:
    """All four metrics for one (series, model) pair.

    mape_percent is None when every term was excluded; r2 is None when the
    actuals carry no variance.
    """

    mse: float
    rmse: float
    mape_percent: float | None
    mape_excluded: int
    r2: float | None
    n: int


def _validate(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.ndim != 1 or p.ndim != 1:
        raise InvalidInputError("metric inputs must be 1-d sequences")
    if len(a) != len(p):
        raise InvalidInputError(f"length mismatch: {len(a)} actual vs {len(p)} predicted")
    if len(a) == 0:
        raise InvalidInputError("metric inputs must be non-empty")
    return a, p


def mse(actual, predicted) -> float:
    """Mean squared error, (1/n) * sum((y - yhat)^2)."""
    a, p = _validate(actual, predicted)
    return float(np.mean((a - p) ** 2))


def rmse(actual, predicted) -> float:
    """Square root of the MSE, in the units of the data."""
    return math.sqrt(mse(actual, predicted))


def mape(
    actual, predicted, zero_threshold: float = MAPE_ZERO_THRESHOLD
) -> tuple[float | None, int]:
    """Mean absolute percentage error over terms with |actual| >= threshold.

    Returns (percent, excluded_count); percent is None when every term was
    excluded.
    """
    a, p = _validate(actual, predicted)
    included = np.abs(a) >= zero_threshold
    excluded = int(len(a) - included.sum())
    if excluded == len(a):
        return None, excluded
    terms = np.abs(a[included] - p[included]) / np.abs(a[included])
    return float(terms.mean() * 100.0), excluded


def r2(actual, predicted) -> float | None:
    """1 - SSE/SST; None on constant actuals, negative for fits worse than the mean."""
    a, p = _validate(actual, predicted)
    sst = float(np.sum((a - a.mean()) ** 2))
    if sst < R2_VARIANCE_FLOOR:
        return None
    sse = float(np.sum((a - p) ** 2))
    return 1.0 - sse / sst


def evaluate(actual, predicted) -> EvalReport:
    """All four metrics on one aligned pair."""
    a, p = _validate(actual, predicted)
    m = mse(a, p)
    mape_percent, excluded = mape(a, p)
    return EvalReport(
        mse=m,
        rmse=math.sqrt(m),
        mape_percent=mape_percent,
        mape_excluded=excluded,
        r2=r2(a, p),
        n=len(a),
    )
