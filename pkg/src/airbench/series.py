"""Monthly time-series data model shared by every stage of the pipeline.

All containers are immutable after construction: arrays are copied and
marked read-only, so values can be shared freely across worker threads.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRangeError, InvalidSplitError

_STAMP_RE = re.compile(r"^(\d{4})-(\d{2})$")


@dataclass(frozen=True, order=True)
class MonthStamp:
    """A calendar month, totally ordered by (year, month)."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    def plus(self, months: int) -> "MonthStamp":
        """The stamp `months` whole months after this one (may be negative)."""
        total = self.year * 12 + (self.month - 1) + months
        return MonthStamp(total // 12, total % 12 + 1)

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        m = _STAMP_RE.match(text)
        if m is None:
            raise ValueError(f"expected YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def stamp_range(start: MonthStamp, n: int) -> list[MonthStamp]:
    """n consecutive months beginning at start."""
    if n < 1:
        raise EmptyRangeError(f"stamp_range needs n >= 1, got {n}")
    return [start.plus(i) for i in range(n)]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly monthly values with explicit per-point missingness.

    The stamp of index i is start.plus(i); missing points keep their slot
    (mask False) so the timeline never has holes. Values at missing slots
    are normalized to NaN and must not be read without checking the mask.
    """

    start: MonthStamp
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) == 0:
            raise ValueError("values must be a non-empty 1-d sequence")
        if self.mask is None:
            mask = np.ones(len(values), dtype=bool)
        else:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != values.shape:
                raise ValueError("mask and values must have the same length")
        values = values.copy()
        values[~mask] = np.nan
        object.__setattr__(self, "values", _readonly(values))
        m = mask.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def stamps(self) -> list[MonthStamp]:
        return stamp_range(self.start, len(self))

    @property
    def end(self) -> MonthStamp:
        return self.start.plus(len(self) - 1)

    def present_values(self) -> np.ndarray:
        return self.values[self.mask]

    @property
    def n_present(self) -> int:
        return int(self.mask.sum())

    @property
    def fully_present(self) -> bool:
        return bool(self.mask.all())


class PollutantKind(enum.Enum):
    """The closed set of pollutant channels, all measured in ug/m3."""

    CO = "CO"
    CO2 = "CO2"
    SO2 = "SO2"
    SO4 = "SO4"
    PM2_5 = "PM2_5"
    PM10 = "PM10"

    @classmethod
    def parse(cls, text: str) -> "PollutantKind":
        try:
            return cls[text]
        except KeyError:
            raise ValueError(f"unknown pollutant {text!r}") from None

    def __str__(self) -> str:
        return self.name

    @property
    def unit(self) -> str:
        return "ug/m3"


@dataclass(frozen=True)
class StationSeries:
    """One (state, pollutant) target plus optional meteorological channels.

    Exogenous channels (wind_speed m/s, temperature degC, rainfall mm) must
    cover exactly the target's timeline.
    """

    state: str
    pollutant: PollutantKind
    target: TimeSeries
    exogenous: dict[str, TimeSeries] = field(default_factory=dict)

    def __post_init__(self):
        if not self.state:
            raise ValueError("state label must be non-empty")
        for name, series in self.exogenous.items():
            if series.start != self.target.start or len(series) != len(self.target):
                raise ValueError(
                    f"exogenous series {name!r} does not align with the target "
                    f"({series.start}+{len(series)} vs {self.target.start}+{len(self.target)})"
                )
        object.__setattr__(self, "exogenous", dict(sorted(self.exogenous.items())))

    @property
    def key(self) -> tuple[str, str]:
        return (self.state, self.pollutant.name)


def model_time(series_len: int, train_len: int) -> np.ndarray:
    """Normalized time grid: training index i maps to i / (train_len - 1).

    The first training stamp lands on 0.0 and the last on exactly 1.0;
    indices past the training span extrapolate beyond 1. A single-point
    training span degenerates to all zeros.
    """
    if train_len < 1 or train_len > series_len:
        raise InvalidSplitError(
            f"train_len must be in 1..series_len, got {train_len} of {series_len}"
        )
    if train_len == 1:
        return np.zeros(series_len)
    return np.arange(series_len, dtype=float) / (train_len - 1)
