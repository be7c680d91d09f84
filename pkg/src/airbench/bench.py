"""Benchmark orchestration over the state x pollutant x model grid.

Per series: interpolate, split chronologically, scale on the training side,
fit both models on the scaled training data, forecast the full test window,
invert the scaling, and evaluate in original units. Failures are isolated
per (series, model) row so one bad group never aborts a run.

Each series derives its own RNG seed from (run seed, state, pollutant), so
results are independent of worker scheduling and --jobs.
"""
from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import additive, lstm
from .errors import AirbenchError
from .io import Dataset, write_forecast_csv, write_results_csv
from .metrics import EvalReport, evaluate
from .plot import ForecastBundle, render_plot
from .preprocess import (
    ScalerParams,
    apply_minmax,
    chrono_split,
    fit_minmax,
    interpolate_linear,
    invert_minmax,
)
from .series import PollutantKind, StationSeries, TimeSeries, model_time

MODEL_ADDITIVE = "ADDITIVE"
MODEL_LSTM = "LSTM"


def default_grid() -> tuple[lstm.LstmConfig, ...]:
    """The stock search lattice: layers x cells x learning rate."""
    return tuple(
        lstm.LstmConfig(layers=l, cells=c, learning_rate=r, epochs=200, batch_size=8)
        for l in (1, 2)
        for c in (64, 128)
        for r in (1e-2, 1e-3)
    )


@dataclass(frozen=True)
class RunConfig:
    """One benchmark run's knobs."""

    train_fraction: float = 0.8
    additive: additive.AdditiveConfig = field(default_factory=additive.AdditiveConfig)
    grid: tuple[lstm.LstmConfig, ...] = field(default_factory=default_grid)
    seed: int = 0
    lstm_univariate: bool = False
    plots: bool = False
    jobs: int = 1

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not self.grid:
            raise ValueError("grid must be non-empty")


@dataclass(frozen=True)
class BenchRow:
    state: str
    pollutant: PollutantKind
    model: str
    report: EvalReport | None
    wall_time_ms: float | None
    error: str | None = None


@dataclass(frozen=True)
class BenchMatrix:
    rows: tuple[BenchRow, ...]


@dataclass(frozen=True)
class SeriesOutput:
    """Worker result: two matrix rows plus whatever artifacts succeeded."""

    state: str
    pollutant: PollutantKind
    rows: tuple[BenchRow, BenchRow]
    test_actual: TimeSeries | None = None
    forecasts: dict[str, np.ndarray] = field(default_factory=dict)
    components: dict[str, np.ndarray] = field(default_factory=dict)
    bundle: ForecastBundle | None = None


def series_seed(run_seed: int, state: str, pollutant: PollutantKind) -> int:
    """Stable 63-bit per-series seed; independent of scheduling and hash salt."""
    digest = hashlib.sha256(f"{run_seed}|{state}|{pollutant.name}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _scaled(series: TimeSeries, scaler: ScalerParams) -> TimeSeries:
    return TimeSeries(series.start, apply_minmax(series.values, scaler))


def _error_row(station: StationSeries, model: str, note: str) -> BenchRow:
    return BenchRow(station.state, station.pollutant, model, None, None, error=note)


def _invert_components(fc: additive.AdditiveForecast, scaler: ScalerParams):
    """Back to original units, keeping trend + seasonal == total (events fold
    into the trend so the decomposition stays two-part)."""
    if scaler.degenerate:
        n = len(fc.yhat)
        return np.full(n, scaler.vmin), np.full(n, scaler.vmin), np.zeros(n)
    span = scaler.vmax - scaler.vmin
    total = fc.yhat * span + scaler.vmin
    trend = (fc.trend + fc.events) * span + scaler.vmin
    seasonal = fc.seasonal * span
    return total, trend, seasonal


def _process_series(station: StationSeries, cfg: RunConfig, seed: int) -> SeriesOutput:
    try:
        target = interpolate_linear(station.target)
        pair = chrono_split(target, cfg.train_fraction)
        scaler = fit_minmax(pair.train)
        scaled_train = _scaled(pair.train, scaler)
        exog_scaled: dict[str, TimeSeries] = {}
        if not cfg.lstm_univariate:
            for name, channel in station.exogenous.items():
                filled = interpolate_linear(channel)
                ch_pair = chrono_split(filled, cfg.train_fraction)
                ch_scaler = fit_minmax(ch_pair.train)
                exog_scaled[name] = _scaled(ch_pair.train, ch_scaler)
    except AirbenchError as exc:
        note = str(exc)
        return SeriesOutput(
            station.state,
            station.pollutant,
            (
                _error_row(station, MODEL_ADDITIVE, note),
                _error_row(station, MODEL_LSTM, note),
            ),
        )

    n = len(target)
    horizon = n - pair.split_index
    horizon_t = model_time(n, pair.split_index)[pair.split_index :]
    forecasts: dict[str, np.ndarray] = {}
    components: dict[str, np.ndarray] = {}

    started = time.perf_counter()
    try:
        add_fit = additive.fit(scaled_train, cfg.additive)
        fc = additive.predict(add_fit, horizon_t)
        add_pred, add_trend, add_seasonal = _invert_components(fc, scaler)
        elapsed = (time.perf_counter() - started) * 1000.0
        add_row = BenchRow(
            station.state, station.pollutant, MODEL_ADDITIVE,
            evaluate(pair.test.values, add_pred), elapsed,
        )
        forecasts["additive"] = add_pred
        components["additive_trend"] = add_trend
        components["additive_seasonal"] = add_seasonal
    except (AirbenchError, np.linalg.LinAlgError) as exc:
        add_row = _error_row(station, MODEL_ADDITIVE, str(exc))

    started = time.perf_counter()
    try:
        scaled_station = StationSeries(
            station.state, station.pollutant, scaled_train, exog_scaled
        )
        best, _ = lstm.grid_search(scaled_station, cfg.grid, seed=seed)
        model = lstm.train(scaled_station, replace(best, seed=seed), scaler=scaler)
        feats = lstm.feature_matrix(scaled_train, exog_scaled)
        preds = lstm.predict_recursive(model, feats[-best.lookback :], horizon)
        lstm_pred = invert_minmax(preds, scaler)
        elapsed = (time.perf_counter() - started) * 1000.0
        lstm_row = BenchRow(
            station.state, station.pollutant, MODEL_LSTM,
            evaluate(pair.test.values, lstm_pred), elapsed,
        )
        forecasts["lstm"] = lstm_pred
    except AirbenchError as exc:
        lstm_row = _error_row(station, MODEL_LSTM, str(exc))

    bundle = None
    if forecasts:
        bundle = ForecastBundle(
            state=station.state,
            pollutant=station.pollutant,
            actual=target,
            forecasts=forecasts,
            test_start_index=pair.split_index,
        )
    return SeriesOutput(
        station.state,
        station.pollutant,
        (add_row, lstm_row),
        test_actual=pair.test,
        forecasts=forecasts,
        components=components,
        bundle=bundle,
    )


def run_series_outputs(dataset: Dataset, cfg: RunConfig) -> list[SeriesOutput]:
    """All per-series results, aggregated in key order regardless of jobs."""
    keys = sorted(dataset.records)
    stations = [dataset.records[k] for k in keys]
    seeds = [series_seed(cfg.seed, s.state, s.pollutant) for s in stations]
    if cfg.jobs == 1 or len(stations) <= 1:
        return [_process_series(s, cfg, sd) for s, sd in zip(stations, seeds)]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        futures = [pool.submit(_process_series, s, cfg, sd) for s, sd in zip(stations, seeds)]
        return [f.result() for f in futures]


def run_benchmark(dataset: Dataset, cfg: RunConfig) -> BenchMatrix:
    """The full state x pollutant x model result grid."""
    rows: list[BenchRow] = []
    for output in run_series_outputs(dataset, cfg):
        rows.extend(output.rows)
    return BenchMatrix(rows=tuple(rows))


def _safe_name(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in text)


def config_lines(cfg: RunConfig) -> list[str]:
    """Flat, sorted description of a run config for the manifest.

    jobs is omitted on purpose: parallelism must not affect any output, so
    recording it would break byte-identity between -j1 and -jN runs.
    """
    lines = [
        f"additive.changepoint_range={cfg.additive.changepoint_range!r}",
        f"additive.n_changepoints={cfg.additive.n_changepoints}",
        f"additive.seasonalities={';'.join(f'{p!r}:{k}' for p, k in cfg.additive.seasonalities)}",
        f"additive.seasonality_penalty={cfg.additive.seasonality_penalty!r}",
        f"additive.trend_penalty={cfg.additive.trend_penalty!r}",
        f"lstm_univariate={cfg.lstm_univariate}",
        f"plots={cfg.plots}",
        f"seed={cfg.seed}",
        f"train_fraction={cfg.train_fraction!r}",
    ]
    for i, cand in enumerate(cfg.grid):
        lines.append(
            f"grid.{i}=layers:{cand.layers},cells:{cand.cells},lr:{cand.learning_rate!r},"
            f"epochs:{cand.epochs},batch:{cand.batch_size},lookback:{cand.lookback},"
            f"dropout:{cand.dropout!r}"
        )
    return sorted(lines)


def write_run_artifacts(
    outputs: list[SeriesOutput], cfg: RunConfig, out_dir, input_name: str
) -> None:
    """results.csv, per-series forecast CSVs, optional plots, and the manifest.

    Every artifact is a pure function of (input bytes, config, seed); wall
    times never enter the files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix = BenchMatrix(rows=tuple(r for o in outputs for r in o.rows))
    write_results_csv(matrix, out / "results.csv")

    manifest = ["airbench run manifest", f"input={input_name}"]
    manifest.extend(config_lines(cfg))
    for output in outputs:
        base = f"{_safe_name(output.state)}_{output.pollutant.name}"
        if output.forecasts and output.test_actual is not None:
            write_forecast_csv(
                output.state,
                output.pollutant,
                output.test_actual,
                output.forecasts,
                output.components,
                out / f"forecast_{base}.csv",
            )
        if cfg.plots and output.bundle is not None:
            render_plot(output.bundle, out / f"{base}.svg")
        for row in output.rows:
            status = "ok" if row.error is None else f"error {row.error}"
            manifest.append(f"series {output.state} {output.pollutant.name} {row.model} {status}")
    (out / "run_manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")
