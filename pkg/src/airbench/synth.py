"""Seeded generators for the three benchmark data regimes.

SEASONAL_TREND is a line plus a sinusoid, STRUCTURAL_BREAK adds a sharp level
drop with a 12-month linear recovery (a pandemic-style dip and rebound), and
NEAR_CONSTANT is a flat line with noise at most a thousandth of its level.

Gaussian noise is produced by the Marsaglia polar method on top of the
generator's uniform doubles. That keeps the exact sample stream pinned to
this module rather than to whichever normal sampler the numpy version ships,
so suites regenerate identically anywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import InvalidSpecError
from .series import MonthStamp, PollutantKind, StationSeries, TimeSeries, model_time


class RegimeKind(Enum):
    SEASONAL_TREND = "seasonal"
    STRUCTURAL_BREAK = "break"
    NEAR_CONSTANT = "constant"


_DEFAULT_POLLUTANT = {
    RegimeKind.SEASONAL_TREND: PollutantKind.CO,
    RegimeKind.STRUCTURAL_BREAK: PollutantKind.SO4,
    RegimeKind.NEAR_CONSTANT: PollutantKind.SO2,
}

BREAK_RECOVERY_MONTHS = 12
DEFAULT_START = MonthStamp(2018, 1)


@dataclass(frozen=True)
class RegimeSpec:
    """Parameters of one synthetic series.

    trend_slope is the total rise over the series span (per unit of the
    series' own 0..1 model time); the seasonal term is
    seasonal_amp * sin(2*pi*i / period_months) over the month index i.
    """

    kind: RegimeKind
    n_months: int = 72
    base: float = 0.5
    trend_slope: float = 0.0
    seasonal_amp: float = 0.0
    period_months: float = 12.0
    noise_sigma: float = 0.0
    break_month_index: int = 52
    break_drop_fraction: float = 0.5
    missing_fraction: float = 0.0
    seed: int = 0
    start: MonthStamp = DEFAULT_START

    def __post_init__(self):
        if self.n_months < 1:
            raise InvalidSpecError("n_months must be >= 1")
        if self.period_months <= 0:
            raise InvalidSpecError("period_months must be positive")
        if self.noise_sigma < 0:
            raise InvalidSpecError("noise_sigma must be >= 0")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise InvalidSpecError("missing_fraction must be in [0, 1)")
        if self.n_months - _round_half_up(self.missing_fraction * self.n_months) < 2:
            raise InvalidSpecError("missing_fraction must leave at least 2 present points")
        if self.kind is RegimeKind.STRUCTURAL_BREAK:
            if not 0 <= self.break_month_index < self.n_months:
                raise InvalidSpecError("break_month_index must lie inside the series")
            if not 0.0 <= self.break_drop_fraction <= 1.0:
                raise InvalidSpecError("break_drop_fraction must be in [0, 1]")
        if self.kind is RegimeKind.NEAR_CONSTANT:
            if self.trend_slope != 0.0 or self.seasonal_amp != 0.0:
                raise InvalidSpecError("a near-constant regime has no trend or seasonality")
            if self.noise_sigma > 1e-3 * abs(self.base):
                raise InvalidSpecError(
                    "near-constant noise_sigma must be <= 1e-3 * |base|"
                )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _polar_gaussians(rng: np.random.Generator, n: int) -> np.ndarray:
    """Standard normals via the Marsaglia polar method (fixed, version-proof)."""
    out = np.empty(n)
    i = 0
    while i < n:
        u = 2.0 * rng.random() - 1.0
        v = 2.0 * rng.random() - 1.0
        s = u * u + v * v
        if s >= 1.0 or s == 0.0:
            continue
        factor = math.sqrt(-2.0 * math.log(s) / s)
        out[i] = u * factor
        i += 1
        if i < n:
            out[i] = v * factor
            i += 1
    return out


def generate(
    spec: RegimeSpec,
    state: str | None = None,
    pollutant: PollutantKind | None = None,
) -> StationSeries:
    """Deterministically realize one series from its spec.

    The generator draws noise first and the missing-point subset second, so
    the underlying values of a series do not depend on its missing_fraction.
    """
    n = spec.n_months
    rng = np.random.default_rng(spec.seed)
    i = np.arange(n, dtype=float)
    t = model_time(n, n)

    if spec.kind is RegimeKind.NEAR_CONSTANT:
        values = np.full(n, spec.base)
    else:
        values = (
            spec.base
            + spec.trend_slope * t
            + spec.seasonal_amp * np.sin(2.0 * np.pi * i / spec.period_months)
        )
        if spec.kind is RegimeKind.STRUCTURAL_BREAK:
            rel = i - spec.break_month_index
            depth = spec.break_drop_fraction * spec.base
            dip = np.where(
                (rel >= 0) & (rel < BREAK_RECOVERY_MONTHS),
                depth * (1.0 - rel / BREAK_RECOVERY_MONTHS),
                0.0,
            )
            values = values - dip

    if spec.noise_sigma > 0.0:
        values = values + spec.noise_sigma * _polar_gaussians(rng, n)

    mask = np.ones(n, dtype=bool)
    n_missing = _round_half_up(spec.missing_fraction * n)
    if n_missing:
        mask[rng.permutation(n)[:n_missing]] = False

    return StationSeries(
        state=state if state is not None else f"SEED{spec.seed:03d}",
        pollutant=pollutant if pollutant is not None else _DEFAULT_POLLUTANT[spec.kind],
        target=TimeSeries(spec.start, values, mask),
    )


def generate_suite(seeds, spec_template: RegimeSpec) -> list[StationSeries]:
    """One series per seed, all other parameters shared."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seeds must be non-empty")
    return [generate(replace(spec_template, seed=int(s))) for s in seeds]
