"""CSV ingestion and emission.

Input schema (one row per state, pollutant, month):

    date,state,pollutant,value,wind_speed,temperature,rainfall

Dates are YYYY-MM, pollutants one of CO/CO2/SO2/SO4/PM2_5/PM10, empty cells
mean missing. Rows are grouped by (state, pollutant); each group must be
gap-free and duplicate-free once sorted by date.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CsvParseError, DuplicateRecordError, MonthGapError
from .metrics import EvalReport
from .series import MonthStamp, PollutantKind, StationSeries, TimeSeries

INPUT_HEADER = ["date", "state", "pollutant", "value", "wind_speed", "temperature", "rainfall"]
EXOG_COLUMNS = ["wind_speed", "temperature", "rainfall"]
RESULTS_HEADER = [
    "state", "pollutant", "model", "n_test", "mse", "rmse",
    "mape_percent", "mape_excluded", "r2", "wall_time_ms",
]


@dataclass(frozen=True)
class Dataset:
    """All ingested series, keyed by (state, pollutant name), keys sorted."""

    records: dict[tuple[str, str], StationSeries]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records.values())

    def get(self, state: str, pollutant: PollutantKind) -> StationSeries:
        return self.records[(state, pollutant.name)]


def _parse_cell(text: str, line: int, column: str) -> float | None:
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise CsvParseError(line, f"bad number {text!r} in column {column}") from None


def load_csv(path) -> Dataset:
    """Parse, group, sort, and validate the input schema."""
    groups: dict[tuple[str, str], dict[MonthStamp, tuple]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(1, "empty file") from None
        if header != INPUT_HEADER:
            raise CsvParseError(1, f"expected header {','.join(INPUT_HEADER)}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(INPUT_HEADER):
                raise CsvParseError(line, f"expected {len(INPUT_HEADER)} fields, got {len(row)}")
            date_text, state, pollutant_text = row[0], row[1], row[2]
            try:
                stamp = MonthStamp.parse(date_text)
            except ValueError as exc:
                raise CsvParseError(line, str(exc)) from None
            if not state:
                raise CsvParseError(line, "empty state")
            try:
                pollutant = PollutantKind.parse(pollutant_text)
            except ValueError as exc:
                raise CsvParseError(line, str(exc)) from None
            cells = tuple(
                _parse_cell(row[3 + j], line, name)
                for j, name in enumerate(["value"] + EXOG_COLUMNS)
            )
            key = (state, pollutant.name)
            group = groups.setdefault(key, {})
            if stamp in group:
                raise DuplicateRecordError(
                    f"duplicate row for {state}/{pollutant.name} at {stamp}"
                )
            group[stamp] = cells

    records: dict[tuple[str, str], StationSeries] = {}
    for key in sorted(groups):
        state, pollutant_name = key
        group = groups[key]
        stamps = sorted(group)
        start, end = stamps[0], stamps[-1]
        expected = (end.year - start.year) * 12 + (end.month - start.month) + 1
        if expected != len(stamps):
            for offset in range(expected):
                if start.plus(offset) not in group:
                    raise MonthGapError(
                        f"{state}/{pollutant_name} is missing a row for {start.plus(offset)}"
                    )
        columns = np.array(
            [[np.nan if c is None else c for c in group[s]] for s in stamps], dtype=float
        )
        target = TimeSeries(start, columns[:, 0], ~np.isnan(columns[:, 0]))
        exogenous = {}
        for j, name in enumerate(EXOG_COLUMNS, start=1):
            mask = ~np.isnan(columns[:, j])
            if mask.any():
                exogenous[name] = TimeSeries(start, columns[:, j], mask)
        records[key] = StationSeries(
            state=state,
            pollutant=PollutantKind.parse(pollutant_name),
            target=target,
            exogenous=exogenous,
        )
    return Dataset(records=records)


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_series_csv(series_list, path) -> None:
    """Emit StationSeries rows in the input schema (repr floats round-trip)."""
    ordered = sorted(series_list, key=lambda s: (s.state, s.pollutant.name))
    lines = [",".join(INPUT_HEADER)]
    for station in ordered:
        target = station.target
        exog_cols = [station.exogenous.get(name) for name in EXOG_COLUMNS]
        for idx, stamp in enumerate(target.stamps):
            cells = [str(stamp), station.state, station.pollutant.name]
            cells.append(_cell(float(target.values[idx]) if target.mask[idx] else None))
            for ex in exog_cols:
                if ex is None or not ex.mask[idx]:
                    cells.append("")
                else:
                    cells.append(_cell(float(ex.values[idx])))
            lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _sci(value: float | None) -> str:
    return "" if value is None else f"{value:.5e}"


def format_report_fields(report: EvalReport | None) -> list[str]:
    if report is None:
        return ["", "", "", "", "", ""]
    return [
        str(report.n),
        _sci(report.mse),
        _sci(report.rmse),
        _sci(report.mape_percent),
        str(report.mape_excluded),
        _sci(report.r2),
    ]


def write_results_csv(matrix, path) -> None:
    """Benchmark grid as CSV, 6 significant digits, undefined fields empty.

    The wall_time_ms column is part of the schema but always written empty:
    result files are byte-reproducible artifacts and measured timings are
    not. Timings stay on the in-memory rows and the console summary.
    """
    rows = sorted(matrix.rows, key=lambda r: (r.state, r.pollutant.name, r.model))
    lines = [",".join(RESULTS_HEADER)]
    for row in rows:
        lines.append(
            ",".join([row.state, row.pollutant.name, row.model]
                     + format_report_fields(row.report) + [""])
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


FORECAST_SERIES_ORDER = ["actual", "lstm", "additive", "additive_trend", "additive_seasonal"]


def write_forecast_csv(
    state: str,
    pollutant: PollutantKind,
    actual: TimeSeries | None,
    forecasts: dict[str, np.ndarray],
    components: dict[str, np.ndarray],
    path,
    stamps: list[MonthStamp] | None = None,
) -> None:
    """Long-format date,series,value rows over one aligned window.

    Series names follow FORECAST_SERIES_ORDER; absent ones are skipped. The
    additive_trend and additive_seasonal components sum to the additive
    forecast (events enter the trend-free remainder only when configured).
    """
    if stamps is None:
        if actual is None:
            raise ValueError("need either actual series or explicit stamps")
        stamps = actual.stamps
    named: dict[str, np.ndarray | None] = {}
    if actual is not None:
        named["actual"] = np.where(actual.mask, actual.values, np.nan)
    named.update(forecasts)
    named.update(components)
    for name, values in named.items():
        if values is not None and len(values) != len(stamps):
            raise ValueError(f"series {name!r} is not aligned with the stamps")
    lines = ["date,series,value"]
    for idx, stamp in enumerate(stamps):
        for name in FORECAST_SERIES_ORDER:
            values = named.get(name)
            if values is None:
                continue
            v = values[idx]
            lines.append(f"{stamp},{name},{'' if np.isnan(v) else repr(float(v))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_config_file(path) -> dict[str, str]:
    """Flat key=value lines; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    for raw_line in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line is not key=value: {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
