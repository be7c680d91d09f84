"""Forecasting benchmark harness for monthly air-quality series.

Two competing forecasters, an additive trend/seasonality model and a
from-scratch LSTM, share one preprocessing pipeline and metric suite so they
can be raced fairly over a state x pollutant grid or over seeded synthetic
data regimes.
"""
from .additive import AdditiveConfig, AdditiveFit, AdditiveForecast
from .bench import BenchMatrix, BenchRow, RunConfig, default_grid, run_benchmark
from .io import Dataset, load_csv, write_forecast_csv, write_results_csv, write_series_csv
from .lstm import LstmConfig, LstmFit, LstmWeights, WindowSet, grid_search
from .metrics import EvalReport, evaluate, mape, mse, r2, rmse
from .preprocess import (
    ScalerParams,
    SplitPair,
    apply_minmax,
    chrono_split,
    fit_minmax,
    forward_fill_seasonal,
    interpolate_linear,
    invert_minmax,
)
from .series import (
    MonthStamp,
    PollutantKind,
    StationSeries,
    TimeSeries,
    model_time,
    stamp_range,
)
from .synth import RegimeKind, RegimeSpec, generate, generate_suite

__version__ = "0.1.0"

__all__ = [
    "AdditiveConfig", "AdditiveFit", "AdditiveForecast",
    "BenchMatrix", "BenchRow", "RunConfig", "default_grid", "run_benchmark",
    "Dataset", "load_csv", "write_forecast_csv", "write_results_csv", "write_series_csv",
    "LstmConfig", "LstmFit", "LstmWeights", "WindowSet", "grid_search",
    "EvalReport", "evaluate", "mape", "mse", "r2", "rmse",
    "ScalerParams", "SplitPair", "apply_minmax", "chrono_split", "fit_minmax",
    "forward_fill_seasonal", "interpolate_linear", "invert_minmax",
    "MonthStamp", "PollutantKind", "StationSeries", "TimeSeries",
    "model_time", "stamp_range",
    "RegimeKind", "RegimeSpec", "generate", "generate_suite",
    "__version__",
]
