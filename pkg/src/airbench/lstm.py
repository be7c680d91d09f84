"""From-scratch LSTM forecaster: gated cells, BPTT, Adam, and grid search.

Everything runs on plain numpy. Training is deterministic given the config
seed: weight initialization, batch shuffling, and dropout masks all draw from
a single seeded generator, in a fixed order, so identical inputs reproduce
bitwise-identical fits.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DivergenceError,
    InsufficientDataError,
    NoViableModelError,
    NumericError,
)
from .preprocess import ScalerParams, chrono_split
from .series import StationSeries, TimeSeries

GATES = "ifog"
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
FORGET_BIAS_INIT = 1.0


@dataclass(frozen=True)
class LstmConfig:
    """Architecture and training hyperparameters.

    cells in the 64-128 range is the intended operating point; smaller
    networks are allowed so tests and desk-scale benchmarks stay fast.
    """

    layers: int = 1
    cells: int = 64
    dropout: float = 0.2
    lookback: int = 12
    learning_rate: float = 1e-2
    epochs: int = 200
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.layers not in (1, 2):
            raise ValueError(f"layers must be 1 or 2, got {self.layers}")
        if self.cells < 1:
            raise ValueError("cells must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.lookback < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("lookback, epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class LstmWeights:
    """All trainable arrays, keyed 'l{layer}.{W|U|b}{gate}' plus 'dense.W/b'.

    W matrices map the step input, U matrices the previous hidden state, and
    b are biases, one triple per gate (i, f, o, g). The dense head maps the
    final hidden state to the scalar forecast.
    """

    input_dim: int
    cells: int
    layers: int
    arrays: dict[str, np.ndarray]

    def layer(self, k: int) -> dict[str, np.ndarray]:
        return {
            f"{kind}{g}": self.arrays[f"l{k}.{kind}{g}"] for kind in "WUb" for g in GATES
        }

    def copy(self) -> "LstmWeights":
        return LstmWeights(
            self.input_dim,
            self.cells,
            self.layers,
            {k: v.copy() for k, v in self.arrays.items()},
        )

    def check_finite(self):
        for name, arr in self.arrays.items():
            if not np.isfinite(arr).all():
                raise NumericError(f"non-finite values in weight {name}")


@dataclass(frozen=True)
class LstmFit:
    """A trained network plus the provenance needed to use it."""

    weights: LstmWeights
    config: LstmConfig
    scaler: ScalerParams | None
    training_loss_curve: np.ndarray


@dataclass(frozen=True)
class WindowSet:
    """Sliding next-step-prediction samples: inputs (n, lookback, features)."""

    inputs: np.ndarray
    targets: np.ndarray


def init_weights(input_dim: int, cfg: LstmConfig, rng: np.random.Generator) -> LstmWeights:
    """Uniform +-1/sqrt(cells) matrices; zero biases except forget bias 1.0.

    The forget-gate bias starts open so short series can learn long
    dependencies before the gate saturates shut. Draw order is fixed (layer,
    then gate i/f/o/g, W before U) to keep seeds reproducible.
    """
    h = cfg.cells
    scale = 1.0 / np.sqrt(h)
    arrays: dict[str, np.ndarray] = {}
    for k in range(cfg.layers):
        in_dim = input_dim if k == 0 else h
        for g in GATES:
            arrays[f"l{k}.W{g}"] = rng.uniform(-scale, scale, (in_dim, h))
            arrays[f"l{k}.U{g}"] = rng.uniform(-scale, scale, (h, h))
            arrays[f"l{k}.b{g}"] = (
                np.full(h, FORGET_BIAS_INIT) if g == "f" else np.zeros(h)
            )
    arrays["dense.W"] = rng.uniform(-scale, scale, h)
    arrays["dense.b"] = np.zeros(1)
    return LstmWeights(input_dim, h, cfg.layers, arrays)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _step(x, h_prev, c_prev, lw):
    """One batched cell update; returns (h, c, cache-tuple)."""
    i = _sigmoid(x @ lw["Wi"] + h_prev @ lw["Ui"] + lw["bi"])
    f = _sigmoid(x @ lw["Wf"] + h_prev @ lw["Uf"] + lw["bf"])
    o = _sigmoid(x @ lw["Wo"] + h_prev @ lw["Uo"] + lw["bo"])
    g = np.tanh(x @ lw["Wg"] + h_prev @ lw["Ug"] + lw["bg"])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, c, tc)


def cell_forward(x, h_prev, c_prev, layer_weights):
    """Single-sample cell update (the batched kernel reshaped to 1-d)."""
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise NumericError("non-finite cell input")
    h, c, cache = _step(
        x[None, :], np.asarray(h_prev, float)[None, :], np.asarray(c_prev, float)[None, :],
        layer_weights,
    )
    return h[0], c[0], cache


@dataclass
class _ForwardCache:
    weights: LstmWeights
    step_caches: list[list[tuple]]  # [layer][time]
    masks: list[np.ndarray] | None  # inverted-dropout scale factors, per layer
    layer_outputs: list[np.ndarray]  # masked output sequences, (B, T, H)
    final: np.ndarray  # masked final hidden state fed to the dense head


def _forward_batch(x, weights: LstmWeights, masks=None):
    """Unroll the stack over a (B, T, F) batch.

    masks, when given, holds one (B, T, H) inverted-dropout scale array per
    layer; inference passes None and needs no correction.
    """
    batch, steps, _ = x.shape
    h_dim = weights.cells
    seq = x
    step_caches: list[list[tuple]] = []
    layer_outputs: list[np.ndarray] = []
    for k in range(weights.layers):
        lw = weights.layer(k)
        h = np.zeros((batch, h_dim))
        c = np.zeros((batch, h_dim))
        caches_k = []
        outputs = np.empty((batch, steps, h_dim))
        for t in range(steps):
            h, c, cache = _step(seq[:, t, :], h, c, lw)
            caches_k.append(cache)
            outputs[:, t, :] = h
        if masks is not None:
            outputs = outputs * masks[k]
        step_caches.append(caches_k)
        layer_outputs.append(outputs)
        seq = outputs
    final = seq[:, -1, :]
    pred = final @ weights.arrays["dense.W"] + weights.arrays["dense.b"][0]
    if not (np.isfinite(pred).all() and np.isfinite(c).all()):
        raise NumericError("non-finite activation in forward pass")
    return pred, _ForwardCache(weights, step_caches, masks, layer_outputs, final)


def forward(window, weights: LstmWeights, dropout_masks=None):
    """Single-window forecast; returns (prediction, caches for backward)."""
    window = np.asarray(window, dtype=float)
    if window.ndim == 1:
        window = window[:, None]
    masks = [m[None, ...] for m in dropout_masks] if dropout_masks is not None else None
    pred, cache = _forward_batch(window[None, ...], weights, masks)
    return float(pred[0]), cache


def _zero_grads(weights: LstmWeights) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in weights.arrays.items()}


def _backward_batch(cache: _ForwardCache, d_pred: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of sum(d_pred * pred) via backprop through time."""
    w = cache.weights
    grads = _zero_grads(w)
    grads["dense.W"] = cache.final.T @ d_pred
    grads["dense.b"] = np.array([d_pred.sum()])

    batch, steps, h_dim = cache.layer_outputs[-1].shape
    d_above = np.zeros((batch, steps, h_dim))
    d_above[:, -1, :] = d_pred[:, None] * w.arrays["dense.W"][None, :]

    for k in reversed(range(w.layers)):
        lw = w.layer(k)
        d_out = d_above * cache.masks[k] if cache.masks is not None else d_above
        in_dim = cache.step_caches[k][0][0].shape[1]
        d_below = np.zeros((batch, steps, in_dim))
        dh_next = np.zeros((batch, h_dim))
        dc_next = np.zeros((batch, h_dim))
        for t in reversed(range(steps)):
            x, h_prev, c_prev, i, f, o, g, _, tc = cache.step_caches[k][t]
            dh = d_out[:, t, :] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f
            dai = di * i * (1.0 - i)
            daf = df * f * (1.0 - f)
            dao = do * o * (1.0 - o)
            dag = dg * (1.0 - g * g)
            for gate, da in zip(GATES, (dai, daf, dao, dag)):
                grads[f"l{k}.W{gate}"] += x.T @ da
                grads[f"l{k}.U{gate}"] += h_prev.T @ da
                grads[f"l{k}.b{gate}"] += da.sum(axis=0)
            d_below[:, t, :] = (
                dai @ lw["Wi"].T + daf @ lw["Wf"].T + dao @ lw["Wo"].T + dag @ lw["Wg"].T
            )
            dh_next = (
                dai @ lw["Ui"].T + daf @ lw["Uf"].T + dao @ lw["Uo"].T + dag @ lw["Ug"].T
            )
        d_above = d_below
    return grads


def backward(caches: _ForwardCache, d_loss: float) -> dict[str, np.ndarray]:
    """Gradients for a single-window forward pass, given dLoss/dPrediction."""
    return _backward_batch(caches, np.array([float(d_loss)]))


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per weight array."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def for_weights(cls, weights: LstmWeights) -> "AdamState":
        return cls(m=_zero_grads(weights), v=_zero_grads(weights))


def adam_step(
    weights: LstmWeights,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    step: int,
) -> tuple[LstmWeights, AdamState]:
    """In-place Adam update with bias correction; step counts from 1."""
    b1c = 1.0 - ADAM_BETA1**step
    b2c = 1.0 - ADAM_BETA2**step
    for key, g in grads.items():
        m = state.m[key]
        v = state.v[key]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        weights.arrays[key] -= lr * (m / b1c) / (np.sqrt(v / b2c) + ADAM_EPS)
    return weights, state


def feature_matrix(target: TimeSeries, exogenous: dict[str, TimeSeries]) -> np.ndarray:
    """Stack target plus exogenous channels (sorted by name) as (n, features)."""
    if not target.fully_present:
        raise ValueError("target must be fully present; interpolate first")
    cols = [target.values]
    for name in sorted(exogenous):
        ex = exogenous[name]
        if not ex.fully_present:
            raise ValueError(f"exogenous channel {name!r} must be fully present")
        cols.append(ex.values)
    return np.column_stack(cols)


def make_windows(
    target: TimeSeries, exogenous: dict[str, TimeSeries], lookback: int
) -> WindowSet:
    """Next-step samples: window i covers steps i..i+lookback-1, target i+lookback."""
    feats = feature_matrix(target, exogenous)
    n = len(feats)
    if n <= lookback:
        raise InsufficientDataError(
            f"need more than lookback={lookback} points, got {n}"
        )
    count = n - lookback
    inputs = np.stack([feats[i : i + lookback] for i in range(count)])
    targets = target.values[lookback:].copy()
    return WindowSet(inputs=inputs, targets=targets)


def train(train_series: StationSeries, cfg: LstmConfig,
          scaler: ScalerParams | None = None) -> LstmFit:
    """Mini-batch Adam training on next-step MSE.

    The per-epoch loss curve records the running training MSE (before each
    batch's update). A non-finite loss aborts with the offending epoch.
    """
    windows = make_windows(train_series.target, train_series.exogenous, cfg.lookback)
    n_samples, _, n_features = windows.inputs.shape
    batch = min(cfg.batch_size, n_samples)

    rng = np.random.default_rng(cfg.seed)
    weights = init_weights(n_features, cfg, rng)
    state = AdamState.for_weights(weights)
    losses = np.empty(cfg.epochs)
    step = 0
    # divergence is detected by explicit finite checks, so the transient
    # overflow of a diverging run should not warn
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            order = rng.permutation(n_samples)
            sse = 0.0
            for lo in range(0, n_samples, batch):
                sel = order[lo : lo + batch]
                xb = windows.inputs[sel]
                yb = windows.targets[sel]
                masks = None
                if cfg.dropout > 0.0:
                    masks = [
                        (rng.random((len(sel), cfg.lookback, cfg.cells)) >= cfg.dropout)
                        / (1.0 - cfg.dropout)
                        for _ in range(cfg.layers)
                    ]
                try:
                    pred, cache = _forward_batch(xb, weights, masks)
                except NumericError as exc:
                    raise DivergenceError(f"diverged at epoch {epoch}: {exc}") from exc
                err = pred - yb
                sse += float(err @ err)
                grads = _backward_batch(cache, 2.0 * err / len(sel))
                step += 1
                adam_step(weights, grads, state, cfg.learning_rate, step)
            loss = sse / n_samples
            if not np.isfinite(loss):
                raise DivergenceError(f"training loss became non-finite at epoch {epoch}")
            losses[epoch] = loss
    return LstmFit(weights=weights, config=cfg, scaler=scaler, training_loss_curve=losses)


def predict_recursive(fit: LstmFit, context: np.ndarray, horizon: int) -> np.ndarray:
    """Closed-loop multi-step forecast from the last observed window.

    Each prediction is pushed into the window for the next step; exogenous
    channels, when present, are held at their last observed value since no
    future meteorology is available.
    """
    context = np.asarray(context, dtype=float)
    if context.ndim == 1:
        context = context[:, None]
    if context.shape[0] != fit.config.lookback:
        raise ValueError(
            f"context must cover lookback={fit.config.lookback} steps, got {context.shape[0]}"
        )
    window = context.copy()
    out = np.empty(horizon)
    for i in range(horizon):
        pred, _ = _forward_batch(window[None, ...], fit.weights, None)
        out[i] = pred[0]
        next_row = window[-1].copy()
        next_row[0] = pred[0]
        window = np.vstack([window[1:], next_row[None, :]])
    return out


def grid_search(
    train_series: StationSeries, grid, seed: int
) -> tuple[LstmConfig, list[tuple[LstmConfig, float | None]]]:
    """Pick the config with minimal validation MSE over the lattice.

    The training series is split 80/20 chronologically; each candidate is
    trained on the head and scored by recursive forecast over the tail,
    mirroring how the winner will be used. Ties break toward fewer layers,
    fewer cells, lower learning rate, then declaration order. Candidates that
    diverge score None; if all do, NoViableModelError is raised.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be non-empty")
    pair = chrono_split(train_series.target, 0.8)
    fit_exog = {
        name: TimeSeries(ex.start, ex.values[: pair.split_index], ex.mask[: pair.split_index])
        for name, ex in train_series.exogenous.items()
    }
    fit_station = StationSeries(
        train_series.state, train_series.pollutant, pair.train, fit_exog
    )
    table: list[tuple[LstmConfig, float | None]] = []
    for cand in grid:
        try:
            model = train(fit_station, replace(cand, seed=seed))
            feats = feature_matrix(pair.train, fit_exog)
            preds = predict_recursive(model, feats[-cand.lookback :], len(pair.test))
            score = float(np.mean((pair.test.values - preds) ** 2))
            if not np.isfinite(score):
                score = None
        except (DivergenceError, InsufficientDataError):
            score = None
        table.append((cand, score))
    viable = [
        (score, cand.layers, cand.cells, cand.learning_rate, idx)
        for idx, (cand, score) in enumerate(table)
        if score is not None
    ]
    if not viable:
        raise NoViableModelError("every grid candidate failed to train")
    best_idx = min(viable)[4]
    return grid[best_idx], table
