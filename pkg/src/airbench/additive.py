"""Decomposable forecaster: piecewise-linear trend + Fourier seasonality + events.

The model is trend(t) + seasonal(t) + events(t) fitted by penalized least
squares in closed form. The trend is a hinge basis, so slope changes at the
changepoints are continuous by construction; quadratic penalties on the
changepoint deltas and Fourier coefficients play the role of the usual
shrinkage priors while keeping the solve deterministic and dependency-free.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, SingularFitError
from .series import MonthStamp, TimeSeries, model_time

SAMPLING_INTERVAL_MONTHS = 1.0
EVENT_RIDGE = 1e-8


class AliasedSeasonalityWarning(UserWarning):
    """A configured seasonal period is shorter than the sampling interval."""


@dataclass(frozen=True)
class AdditiveConfig:
    """Knobs for the decomposable model.

    trend_penalty is the flexibility knob: larger values shrink changepoint
    slope adjustments toward a single straight line. Seasonalities are
    (period_in_months, fourier_order) pairs; order 6 at period 12 spans the
    full set of harmonics identifiable from monthly data.
    """

    n_changepoints: int = 25
    changepoint_range: float = 0.8
    trend_penalty: float = 10.0
    seasonality_penalty: float = 0.1
    seasonalities: tuple[tuple[float, int], ...] = ((12.0, 6),)
    events: tuple[tuple[str, tuple[MonthStamp, ...]], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "seasonalities", tuple((float(p), int(k)) for p, k in self.seasonalities)
        )
        object.__setattr__(
            self, "events", tuple((name, tuple(stamps)) for name, stamps in self.events)
        )
        if self.n_changepoints < 0:
            raise ValueError("n_changepoints must be >= 0")
        if not 0.0 < self.changepoint_range <= 1.0:
            raise ValueError("changepoint_range must be in (0, 1]")
        if self.trend_penalty < 0 or self.seasonality_penalty < 0:
            raise ValueError("penalties must be >= 0")
        for period, order in self.seasonalities:
            if period <= 0:
                raise ValueError(f"seasonal period must be positive, got {period}")
            if order < 1:
                raise ValueError(f"fourier_order must be >= 1, got {order}")


@dataclass(frozen=True)
class AdditiveFit:
    """Fitted parameters plus the anchors needed to evaluate them later."""

    k: float
    m: float
    deltas: np.ndarray
    changepoint_locs: np.ndarray
    fourier_coeffs: tuple[np.ndarray, ...]  # one (2*order,) block per kept seasonality
    kept_seasonalities: tuple[tuple[float, int], ...]
    event_effects: dict[str, float]
    sigma_hat: float
    train_start: MonthStamp
    train_span_months: float
    config: AdditiveConfig


@dataclass(frozen=True)
class AdditiveForecast:
    """Component-wise evaluation of a fit on a time grid."""

    yhat: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    events: np.ndarray


def place_changepoints(train_t: np.ndarray, cfg: AdditiveConfig) -> np.ndarray:
    """Candidate slope-change locations on the training span.

    Uniform quantiles of (0, changepoint_range]: location j is
    j * range / (n + 1). When the series is shorter than the requested count,
    every interior training point becomes a candidate instead.
    """
    train_t = np.asarray(train_t, dtype=float)
    n_train = len(train_t)
    if n_train < 2:
        raise ValueError("changepoint placement needs at least 2 training points")
    n = cfg.n_changepoints
    if n == 0:
        return np.empty(0)
    if n_train <= n:
        interior = train_t[1:-1]
        return interior[interior <= cfg.changepoint_range]
    j = np.arange(1, n + 1, dtype=float)
    return j * cfg.changepoint_range / (n + 1)


def trend_basis(t: np.ndarray, changepoint_locs: np.ndarray) -> np.ndarray:
    """Columns [1, t, (t - s_1)_+, ..., (t - s_J)_+].

    The hinge columns vanish at and before their knot, which makes the fitted
    trend continuous there regardless of the coefficients.
    """
    t = np.asarray(t, dtype=float)
    cols = [np.ones_like(t), t]
    if len(changepoint_locs):
        cols.append(np.maximum(t[:, None] - np.asarray(changepoint_locs)[None, :], 0.0))
        return np.column_stack(cols)
    return np.column_stack(cols)


def fourier_basis(tau_months: np.ndarray, period_months: float, order: int) -> np.ndarray:
    """Interleaved [cos, sin] harmonic columns of tau (in months) at the period."""
    if period_months <= 0:
        raise ValueError("period must be positive")
    if order < 1:
        raise ValueError("order must be >= 1")
    tau = np.asarray(tau_months, dtype=float)
    angles = 2.0 * np.pi * np.arange(1, order + 1) * tau[:, None] / period_months
    out = np.empty((len(tau), 2 * order))
    out[:, 0::2] = np.cos(angles)
    out[:, 1::2] = np.sin(angles)
    return out


def event_basis(
    stamps: list[MonthStamp], events: tuple[tuple[str, tuple[MonthStamp, ...]], ...]
) -> np.ndarray:
    """One 0/1 indicator column per event name, in declaration order."""
    out = np.zeros((len(stamps), len(events)))
    for j, (_, months) in enumerate(events):
        lookup = set(months)
        for i, stamp in enumerate(stamps):
            if stamp in lookup:
                out[i, j] = 1.0
    return out


def _usable_seasonalities(cfg: AdditiveConfig) -> tuple[tuple[float, int], ...]:
    kept = []
    for period, order in cfg.seasonalities:
        if period < SAMPLING_INTERVAL_MONTHS:
            warnings.warn(
                f"seasonality with period {period} months is shorter than the "
                f"monthly sampling interval and cannot be identified; dropping it",
                AliasedSeasonalityWarning,
                stacklevel=3,
            )
            continue
        kept.append((period, order))
    return tuple(kept)


def fit(train: TimeSeries, cfg: AdditiveConfig | None = None) -> AdditiveFit:
    """Penalized least-squares fit of trend + seasonality + events.

    Missing points are dropped from the solve (the basis is still laid out on
    the full training grid). The offset and base slope are never penalized;
    with both penalties at zero and a rank-deficient design the fit raises
    SingularFitError instead of returning garbage.
    """
    cfg = cfg or AdditiveConfig()
    mask = train.mask
    n_present = int(mask.sum())
    if n_present < 2:
        raise InsufficientDataError(f"additive fit needs >= 2 present points, got {n_present}")

    n = len(train)
    t = model_time(n, n)
    span = float(n - 1)
    tau = t * span
    cps = place_changepoints(t, cfg)
    kept = _usable_seasonalities(cfg)

    blocks = [trend_basis(t[mask], cps)]
    penalties = [np.concatenate([[0.0, 0.0], np.full(len(cps), cfg.trend_penalty)])]
    for period, order in kept:
        blocks.append(fourier_basis(tau[mask], period, order))
        penalties.append(np.full(2 * order, cfg.seasonality_penalty))
    if cfg.events:
        present_stamps = [s for s, ok in zip(train.stamps, mask) if ok]
        blocks.append(event_basis(present_stamps, cfg.events))
        # a whisker of ridge so a never-observed event cannot make the
        # system singular, without noticeably shrinking real effects
        penalties.append(np.full(len(cfg.events), EVENT_RIDGE))

    x = np.hstack(blocks)
    lam = np.concatenate(penalties)
    y = train.values[mask]

    a = x.T @ x + np.diag(lam)
    if cfg.trend_penalty == 0.0 and cfg.seasonality_penalty == 0.0:
        if np.linalg.matrix_rank(a) < a.shape[0]:
            raise SingularFitError(
                "normal matrix is singular and both penalties are zero"
            )
    try:
        beta = np.linalg.solve(a, x.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError(str(exc)) from exc

    residuals = y - x @ beta
    sigma_hat = float(np.sqrt(np.mean(residuals**2)))

    pos = 2 + len(cps)
    fourier_coeffs = []
    for _, order in kept:
        fourier_coeffs.append(beta[pos : pos + 2 * order].copy())
        pos += 2 * order
    event_effects = {name: float(beta[pos + j]) for j, (name, _) in enumerate(cfg.events)}

    return AdditiveFit(
        k=float(beta[1]),
        m=float(beta[0]),
        deltas=beta[2 : 2 + len(cps)].copy(),
        changepoint_locs=cps,
        fourier_coeffs=tuple(fourier_coeffs),
        kept_seasonalities=kept,
        event_effects=event_effects,
        sigma_hat=sigma_hat,
        train_start=train.start,
        train_span_months=span,
        config=cfg,
    )


def predict(fit_result: AdditiveFit, horizon_t: np.ndarray) -> AdditiveForecast:
    """Evaluate the fitted components on a model-time grid.

    Values of t past 1.0 extrapolate: the trend keeps its final slope and the
    seasonality repeats with its training-phase alignment.
    """
    t = np.asarray(horizon_t, dtype=float)
    xt = trend_basis(t, fit_result.changepoint_locs)
    coeffs = np.concatenate([[fit_result.m, fit_result.k], fit_result.deltas])
    trend = xt @ coeffs

    tau = t * fit_result.train_span_months
    seasonal = np.zeros_like(t)
    for (period, order), block in zip(fit_result.kept_seasonalities, fit_result.fourier_coeffs):
        seasonal = seasonal + fourier_basis(tau, period, order) @ block

    events = np.zeros_like(t)
    cfg_events = fit_result.config.events
    if cfg_events and fit_result.event_effects:
        offsets = np.rint(tau).astype(int)
        stamps = [fit_result.train_start.plus(int(o)) for o in offsets]
        indicators = event_basis(stamps, cfg_events)
        effects = np.array([fit_result.event_effects[name] for name, _ in cfg_events])
        events = indicators @ effects

    return AdditiveForecast(
        yhat=trend + seasonal + events, trend=trend, seasonal=seasonal, events=events
    )
