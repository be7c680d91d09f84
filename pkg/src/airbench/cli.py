"""Command-line interface: bench, synth, forecast, and eval subcommands.

Exit codes: 0 success, 1 usage error (bad flags or config), 2 data error
(unreadable or malformed inputs).
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import additive, lstm
from .bench import RunConfig, run_series_outputs, series_seed, write_run_artifacts
from .errors import AirbenchError, UsageError
from .io import (
    load_csv,
    parse_config_file,
    write_forecast_csv,
    write_series_csv,
)
from .metrics import evaluate
from .preprocess import apply_minmax, fit_minmax, interpolate_linear, invert_minmax
from .series import MonthStamp, PollutantKind, StationSeries, TimeSeries, stamp_range
from .synth import RegimeKind, RegimeSpec, generate

# break series are dominated by the level shift (mild trend and seasonality),
# seasonal series by their cycle; both run 72 months like the reference span
_SYNTH_DEFAULTS = {
    RegimeKind.SEASONAL_TREND: dict(base=0.5, trend_slope=0.3, seasonal_amp=0.2, noise_sigma=0.02),
    RegimeKind.STRUCTURAL_BREAK: dict(base=0.5, trend_slope=0.1, seasonal_amp=0.02, noise_sigma=0.02),
    RegimeKind.NEAR_CONSTANT: dict(base=0.5, trend_slope=0.0, seasonal_amp=0.0, noise_sigma=1e-4),
}


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage problems."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        lo_text, _, hi_text = text.partition("..")
        try:
            lo, hi = int(lo_text), int(hi_text)
        except ValueError:
            raise UsageError(f"bad seed range {text!r}, expected a..b") from None
        if hi < lo:
            raise UsageError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(text)]
    except ValueError:
        raise UsageError(f"bad seed {text!r}") from None


def _parse_bool(text: str, key: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"config key {key} expects a boolean, got {text!r}")


_CONFIG_KEYS = {
    "train_fraction", "seed", "jobs", "plots", "lstm_univariate",
    "n_changepoints", "changepoint_range", "trend_penalty", "seasonality_penalty",
    "period_months", "fourier_order",
    "lstm_layers", "lstm_cells", "lstm_learning_rates", "lstm_epochs",
    "lstm_batch_size", "lstm_lookback", "lstm_dropout",
}


def build_run_config(options: dict[str, str], args) -> RunConfig:
    """Merge defaults, config-file options, and CLI overrides (CLI wins)."""
    unknown = set(options) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def num(key, default, cast):
        try:
            return cast(options[key]) if key in options else default
        except ValueError:
            raise UsageError(f"config key {key} has a bad value {options[key]!r}") from None

    def int_list(key, default):
        if key not in options:
            return default
        try:
            return tuple(int(v) for v in options[key].split(","))
        except ValueError:
            raise UsageError(f"config key {key} expects comma-separated ints") from None

    add_cfg = additive.AdditiveConfig(
        n_changepoints=num("n_changepoints", 25, int),
        changepoint_range=num("changepoint_range", 0.8, float),
        trend_penalty=num("trend_penalty", 10.0, float),
        seasonality_penalty=num("seasonality_penalty", 0.1, float),
        seasonalities=(
            (num("period_months", 12.0, float), num("fourier_order", 6, int)),
        ),
    )
    layers = int_list("lstm_layers", (1, 2))
    cells = int_list("lstm_cells", (64, 128))
    if "lstm_learning_rates" in options:
        try:
            rates = tuple(float(v) for v in options["lstm_learning_rates"].split(","))
        except ValueError:
            raise UsageError("config key lstm_learning_rates expects comma-separated floats")
    else:
        rates = (1e-2, 1e-3)
    epochs = num("lstm_epochs", 200, int)
    batch = num("lstm_batch_size", 8, int)
    lookback = num("lstm_lookback", 12, int)
    dropout = num("lstm_dropout", 0.2, float)
    try:
        grid = tuple(
            lstm.LstmConfig(
                layers=l, cells=c, learning_rate=r, epochs=epochs,
                batch_size=batch, lookback=lookback, dropout=dropout,
            )
            for l in layers for c in cells for r in rates
        )
        seed = num("seed", 0, int)
        if getattr(args, "seed", None) is not None:
            seed = args.seed
        return RunConfig(
            train_fraction=num("train_fraction", 0.8, float),
            additive=add_cfg,
            grid=grid,
            seed=seed,
            lstm_univariate=bool(getattr(args, "lstm_univariate", False))
            or ("lstm_univariate" in options and _parse_bool(options["lstm_univariate"], "lstm_univariate")),
            plots=bool(getattr(args, "plots", False))
            or ("plots" in options and _parse_bool(options["plots"], "plots")),
            jobs=args.jobs if getattr(args, "jobs", None) is not None else num("jobs", 1, int),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_bench(args) -> int:
    options = {}
    if args.config:
        try:
            options = parse_config_file(args.config)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
    cfg = build_run_config(options, args)
    dataset = load_csv(args.input)
    outputs = run_series_outputs(dataset, cfg)
    write_run_artifacts(outputs, cfg, args.out_dir, Path(args.input).name)
    for output in outputs:
        for row in output.rows:
            if row.error is not None:
                line = f"{row.state} {row.pollutant.name} {row.model}: error {row.error}"
            else:
                line = (
                    f"{row.state} {row.pollutant.name} {row.model}: "
                    f"rmse={row.report.rmse:.5e} ({row.wall_time_ms:.0f} ms)"
                )
            print(line)
    print(f"wrote {args.out_dir}/results.csv")
    return 0


def cmd_synth(args) -> int:
    kind = {
        "seasonal": RegimeKind.SEASONAL_TREND,
        "break": RegimeKind.STRUCTURAL_BREAK,
        "constant": RegimeKind.NEAR_CONSTANT,
    }[args.regime]
    params = dict(_SYNTH_DEFAULTS[kind])
    for key, flag in [
        ("base", "base"), ("trend_slope", "slope"), ("seasonal_amp", "amp"),
        ("noise_sigma", "sigma"),
    ]:
        if getattr(args, flag) is not None:
            params[key] = getattr(args, flag)
    spec = RegimeSpec(
        kind=kind,
        n_months=args.months,
        period_months=args.period,
        break_month_index=args.break_index,
        break_drop_fraction=args.drop_fraction,
        missing_fraction=args.missing,
        start=MonthStamp.parse(args.start),
        **params,
    )
    seeds = _parse_seeds(args.seeds)
    series = [generate(replace(spec, seed=s)) for s in seeds]
    write_series_csv(series, args.out)
    print(f"wrote {len(series)} series to {args.out}")
    return 0


def _fit_full_scale(station, univariate: bool):
    target = interpolate_linear(station.target)
    scaler = fit_minmax(target)
    scaled = TimeSeries(target.start, apply_minmax(target.values, scaler))
    exog = {}
    if not univariate:
        for name, channel in station.exogenous.items():
            filled = interpolate_linear(channel)
            ch_scaler = fit_minmax(filled)
            exog[name] = TimeSeries(filled.start, apply_minmax(filled.values, ch_scaler))
    return target, scaled, exog, scaler


def cmd_forecast(args) -> int:
    dataset = load_csv(args.input)
    pollutant = PollutantKind.parse(args.pollutant)
    key = (args.state, pollutant.name)
    if key not in dataset.records:
        raise AirbenchError(f"no series for state={args.state} pollutant={pollutant.name}")
    station = dataset.records[key]
    options = {}
    if args.config:
        try:
            options = parse_config_file(args.config)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    cfg = build_run_config(options, args)

    target, scaled, exog, scaler = _fit_full_scale(station, cfg.lstm_univariate)
    n = len(target)
    if n < 2:
        raise AirbenchError("series too short to forecast from")
    horizon_stamps = stamp_range(target.end.plus(1), args.horizon)
    forecasts: dict[str, np.ndarray] = {}
    components: dict[str, np.ndarray] = {}

    if args.model in ("additive", "both"):
        fit_result = additive.fit(scaled, cfg.additive)
        t_future = np.arange(n, n + args.horizon, dtype=float) / (n - 1)
        fc = additive.predict(fit_result, t_future)
        forecasts["additive"] = invert_minmax(fc.yhat, scaler)
        span = 0.0 if scaler.degenerate else scaler.vmax - scaler.vmin
        components["additive_trend"] = (fc.trend + fc.events) * span + scaler.vmin
        components["additive_seasonal"] = fc.seasonal * span
    if args.model in ("lstm", "both"):
        seed = series_seed(cfg.seed, station.state, station.pollutant)
        scaled_station = StationSeries(station.state, station.pollutant, scaled, exog)
        best, _ = lstm.grid_search(scaled_station, cfg.grid, seed=seed)
        model = lstm.train(scaled_station, replace(best, seed=seed), scaler=scaler)
        feats = lstm.feature_matrix(scaled, exog)
        preds = lstm.predict_recursive(model, feats[-best.lookback :], args.horizon)
        forecasts["lstm"] = invert_minmax(preds, scaler)

    write_forecast_csv(
        station.state, station.pollutant, None, forecasts, components,
        args.out, stamps=horizon_stamps,
    )
    print(f"wrote {args.horizon}-month forecast to {args.out}")
    return 0


def _read_value_column(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "value" not in header:
            raise AirbenchError(f"{path}: expected a CSV with a 'value' column")
        col = header.index("value")
        values = []
        for row in reader:
            if not row:
                continue
            try:
                values.append(float(row[col]))
            except (ValueError, IndexError):
                raise AirbenchError(f"{path}: bad value row {row!r}") from None
    if not values:
        raise AirbenchError(f"{path}: no value rows")
    return np.array(values)


def cmd_eval(args) -> int:
    actual = _read_value_column(args.actual)
    predicted = _read_value_column(args.predicted)
    report = evaluate(actual, predicted)
    print(f"n {report.n}")
    print(f"mse {report.mse:.5e}")
    print(f"rmse {report.rmse:.5e}")
    mape_text = "undefined" if report.mape_percent is None else f"{report.mape_percent:.5e}"
    print(f"mape_percent {mape_text}")
    print(f"mape_excluded {report.mape_excluded}")
    r2_text = "undefined" if report.r2 is None else f"{report.r2:.5e}"
    print(f"r2 {r2_text}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="airbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_bench = sub.add_parser("bench", help="run the full benchmark matrix")
    p_bench.add_argument("--input", required=True, help="input CSV path")
    p_bench.add_argument("--config", help="flat key=value config file")
    p_bench.add_argument("--out-dir", required=True)
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--lstm-univariate", action="store_true", dest="lstm_univariate")
    p_bench.add_argument("--plots", action="store_true")
    p_bench.add_argument("--jobs", type=int, default=None)
    p_bench.set_defaults(func=cmd_bench)

    p_synth = sub.add_parser("synth", help="generate seeded synthetic series")
    p_synth.add_argument("--regime", required=True, choices=["seasonal", "break", "constant"])
    p_synth.add_argument("--seeds", required=True, help="single seed or inclusive range a..b")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--months", type=int, default=72)
    p_synth.add_argument("--base", type=float, default=None)
    p_synth.add_argument("--slope", type=float, default=None)
    p_synth.add_argument("--amp", type=float, default=None)
    p_synth.add_argument("--sigma", type=float, default=None)
    p_synth.add_argument("--period", type=float, default=12.0)
    p_synth.add_argument("--break-index", type=int, default=52, dest="break_index")
    p_synth.add_argument("--drop-fraction", type=float, default=0.5, dest="drop_fraction")
    p_synth.add_argument("--missing", type=float, default=0.0)
    p_synth.add_argument("--start", default="2018-01")
    p_synth.set_defaults(func=cmd_synth)

    p_fc = sub.add_parser("forecast", help="fit on a full series and forecast ahead")
    p_fc.add_argument("--input", required=True)
    p_fc.add_argument("--state", required=True)
    p_fc.add_argument("--pollutant", required=True)
    p_fc.add_argument("--model", choices=["lstm", "additive", "both"], default="both")
    p_fc.add_argument("--horizon", type=int, required=True)
    p_fc.add_argument("--out", required=True)
    p_fc.add_argument("--config", help="flat key=value config file")
    p_fc.add_argument("--seed", type=int, default=None)
    p_fc.set_defaults(func=cmd_forecast)

    p_eval = sub.add_parser("eval", help="score a forecast CSV against actuals")
    p_eval.add_argument("--actual", required=True)
    p_eval.add_argument("--predicted", required=True)
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"airbench: error: {exc}", file=sys.stderr)
        return 1
    except (AirbenchError, OSError) as exc:
        print(f"airbench: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
