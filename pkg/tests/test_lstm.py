import math
from dataclasses import replace

import numpy as np
import pytest

from fd_check import max_gradient_rel_error

from airbench.errors import (
    DivergenceError,
    InsufficientDataError,
    NoViableModelError,
    NumericError,
)
from airbench.lstm import (
    AdamState,
    LstmConfig,
    LstmWeights,
    adam_step,
    backward,
    cell_forward,
    feature_matrix,
    forward,
    grid_search,
    init_weights,
    make_windows,
    predict_recursive,
    train,
)
from airbench.series import MonthStamp, PollutantKind, StationSeries, TimeSeries

START = MonthStamp(2018, 1)


def station(values, exogenous=None):
    target = TimeSeries(START, values)
    exo = {
        name: TimeSeries(START, vals) for name, vals in (exogenous or {}).items()
    }
    return StationSeries("X", PollutantKind.CO, target, exo)


def zero_layer(in_dim, cells):
    lw = {}
    for g in "ifog":
        lw[f"W{g}"] = np.zeros((in_dim, cells))
        lw[f"U{g}"] = np.zeros((cells, cells))
        lw[f"b{g}"] = np.zeros(cells)
    return lw


class TestMakeWindows:
    def test_basic_shift(self):
        ws = make_windows(TimeSeries(START, [1.0, 2.0, 3.0, 4.0]), {}, lookback=2)
        assert ws.inputs[:, :, 0].tolist() == [[1.0, 2.0], [2.0, 3.0]]
        assert ws.targets.tolist() == [3.0, 4.0]

    def test_72_points_lookback_12(self):
        ws = make_windows(TimeSeries(START, np.arange(72.0)), {}, lookback=12)
        assert len(ws.targets) == 60
        assert ws.inputs.shape == (60, 12, 1)

    def test_meteorological_channels_widen_features(self):
        n = 20
        exo = {k: TimeSeries(START, np.ones(n)) for k in ("wind_speed", "temperature", "rainfall")}
        ws = make_windows(TimeSeries(START, np.arange(float(n))), exo, lookback=4)
        assert ws.inputs.shape[2] == 4

    def test_too_short_rejected(self):
        with pytest.raises(InsufficientDataError):
            make_windows(TimeSeries(START, np.arange(5.0)), {}, lookback=5)

    def test_feature_order_is_target_then_sorted_exog(self):
        n = 6
        exo = {
            "wind_speed": TimeSeries(START, np.full(n, 2.0)),
            "rainfall": TimeSeries(START, np.full(n, 1.0)),
        }
        feats = feature_matrix(TimeSeries(START, np.zeros(n)), exo)
        assert feats[0].tolist() == [0.0, 1.0, 2.0]


class TestCellForward:
    def test_zero_weights_closed_form(self):
        lw = zero_layer(2, 3)
        c_prev = np.array([1.0, -2.0, 0.5])
        h, c, _ = cell_forward(np.array([3.0, -1.0]), np.zeros(3), c_prev, lw)
        assert np.allclose(c, 0.5 * c_prev)
        assert np.allclose(h, 0.5 * np.tanh(0.5 * c_prev))

    def test_zero_state_zero_weights_gives_zero(self):
        lw = zero_layer(2, 3)
        h, c, _ = cell_forward(np.array([1.0, 1.0]), np.zeros(3), np.zeros(3), lw)
        assert np.allclose(h, 0.0) and np.allclose(c, 0.0)

    def test_non_finite_input_rejected(self):
        lw = zero_layer(2, 3)
        with pytest.raises(NumericError):
            cell_forward(np.array([np.nan, 1.0]), np.zeros(3), np.zeros(3), lw)

    def test_matches_independent_oracle(self):
        # standalone re-implementation of the five gate equations
        def oracle(x, h_prev, c_prev, lw):
            def sig(z):
                return 1.0 / (1.0 + math.exp(-z))

            cells = len(h_prev)
            h_out = np.zeros(cells)
            c_out = np.zeros(cells)
            for j in range(cells):
                ai = sum(x[a] * lw["Wi"][a, j] for a in range(len(x)))
                ai += sum(h_prev[b] * lw["Ui"][b, j] for b in range(cells)) + lw["bi"][j]
                af = sum(x[a] * lw["Wf"][a, j] for a in range(len(x)))
                af += sum(h_prev[b] * lw["Uf"][b, j] for b in range(cells)) + lw["bf"][j]
                ao = sum(x[a] * lw["Wo"][a, j] for a in range(len(x)))
                ao += sum(h_prev[b] * lw["Uo"][b, j] for b in range(cells)) + lw["bo"][j]
                ag = sum(x[a] * lw["Wg"][a, j] for a in range(len(x)))
                ag += sum(h_prev[b] * lw["Ug"][b, j] for b in range(cells)) + lw["bg"][j]
                c_out[j] = sig(af) * c_prev[j] + sig(ai) * math.tanh(ag)
                h_out[j] = sig(ao) * math.tanh(c_out[j])
            return h_out, c_out

        rng = np.random.default_rng(0)
        lw = {}
        for g in "ifog":
            lw[f"W{g}"] = rng.normal(size=(2, 3))
            lw[f"U{g}"] = rng.normal(size=(3, 3))
            lw[f"b{g}"] = rng.normal(size=3)
        x = rng.normal(size=2)
        h_prev = rng.normal(size=3)
        c_prev = rng.normal(size=3)
        h, c, _ = cell_forward(x, h_prev, c_prev, lw)
        h_ref, c_ref = oracle(x, h_prev, c_prev, lw)
        assert np.allclose(h, h_ref, atol=1e-12)
        assert np.allclose(c, c_ref, atol=1e-12)

    def test_gates_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(3)
        lw = {k: rng.normal(scale=2.0, size=v.shape) for k, v in zero_layer(4, 5).items()}
        _, _, cache = cell_forward(rng.normal(size=4), rng.normal(size=5), rng.normal(size=5), lw)
        _, _, _, i, f, o, g, c, _ = cache
        for gate in (i, f, o):
            assert np.all(gate > 0.0) and np.all(gate < 1.0)
        assert np.isfinite(c).all()


class TestForward:
    def test_single_step_single_cell_hand_unrolled(self):
        lw = zero_layer(1, 1)
        lw["Wi"][0, 0] = 0.3
        lw["Wg"][0, 0] = 0.7
        weights = LstmWeights(
            1, 1, 1,
            {f"l0.{k}": v for k, v in lw.items()}
            | {"dense.W": np.array([2.0]), "dense.b": np.array([0.25])},
        )
        x = 1.5
        i = 1.0 / (1.0 + math.exp(-0.3 * x))
        g = math.tanh(0.7 * x)
        c = i * g
        h = 0.5 * math.tanh(c)  # output gate at sigmoid(0)
        pred, _ = forward(np.array([[x]]), weights)
        assert pred == pytest.approx(2.0 * h + 0.25, abs=1e-12)

    def test_dropout_rate_zero_equals_disabled(self):
        cfg = LstmConfig(layers=2, cells=6, dropout=0.0, lookback=5)
        weights = init_weights(3, cfg, np.random.default_rng(0))
        window = np.random.default_rng(1).normal(size=(5, 3))
        ones = [np.ones((5, 6)) for _ in range(2)]
        a, _ = forward(window, weights)
        b, _ = forward(window, weights, dropout_masks=ones)
        assert a == b

    def test_inference_ignores_dropout(self):
        # no masks passed means no scaling, whatever the config says
        cfg = LstmConfig(layers=1, cells=4, dropout=0.9, lookback=3)
        weights = init_weights(2, cfg, np.random.default_rng(5))
        window = np.random.default_rng(6).normal(size=(3, 2))
        a, _ = forward(window, weights)
        b, _ = forward(window, weights)
        assert a == b


class TestBackward:
    def test_zero_upstream_gradient_gives_zero_grads(self):
        cfg = LstmConfig(layers=1, cells=4, dropout=0.0, lookback=5)
        weights = init_weights(3, cfg, np.random.default_rng(0))
        window = np.random.default_rng(1).normal(size=(5, 3))
        _, cache = forward(window, weights)
        grads = backward(cache, 0.0)
        assert all(not g.any() for g in grads.values())

    @pytest.mark.parametrize("layers", [1, 2])
    def test_gradients_match_finite_differences(self, layers):
        assert max_gradient_rel_error(layers=layers, seed=0) < 1e-4


class TestAdam:
    def _scalar_weights(self, w0):
        return LstmWeights(1, 1, 1, {"w": np.array([float(w0)])})

    def test_zero_gradient_keeps_weights(self):
        weights = self._scalar_weights(1.0)
        state = AdamState.for_weights(weights)
        adam_step(weights, {"w": np.zeros(1)}, state, lr=0.1, step=1)
        assert weights.arrays["w"][0] == 1.0

    def test_first_step_hand_computed(self):
        # g=0.5, lr=0.1: bias-corrected moments are g and g^2, so the update
        # is lr * g / (|g| + eps)
        weights = self._scalar_weights(1.0)
        state = AdamState.for_weights(weights)
        adam_step(weights, {"w": np.array([0.5])}, state, lr=0.1, step=1)
        expected = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8))
        assert weights.arrays["w"][0] == pytest.approx(expected, rel=1e-12)

    def test_minimizes_quadratic(self):
        weights = self._scalar_weights(1.0)
        state = AdamState.for_weights(weights)
        for step in range(1, 501):
            g = 2.0 * weights.arrays["w"]
            adam_step(weights, {"w": g.copy()}, state, lr=0.05, step=step)
        assert abs(weights.arrays["w"][0]) < 1e-2


class TestTrain:
    def test_constant_series_converges(self):
        st = station(np.full(24, 0.4))
        cfg = LstmConfig(layers=1, cells=8, dropout=0.0, lookback=4, learning_rate=1e-2,
                         epochs=200, batch_size=8, seed=0)
        fit = train(st, cfg)
        assert fit.training_loss_curve[-1] < 1e-6
        assert len(fit.training_loss_curve) == cfg.epochs

    def test_same_seed_bitwise_identical(self):
        rng = np.random.default_rng(12)
        st = station(rng.normal(0.5, 0.1, size=30))
        cfg = LstmConfig(layers=2, cells=6, dropout=0.2, lookback=6, learning_rate=1e-2,
                         epochs=20, batch_size=4, seed=99)
        a = train(st, cfg)
        b = train(st, cfg)
        assert np.array_equal(a.training_loss_curve, b.training_loss_curve)
        for key in a.weights.arrays:
            assert np.array_equal(a.weights.arrays[key], b.weights.arrays[key])

    def test_noiseless_line(self):
        st = station(np.linspace(0.0, 1.0, 60))
        cfg = LstmConfig(layers=1, cells=16, dropout=0.0, lookback=4, learning_rate=1e-2,
                         epochs=200, batch_size=8, seed=0)
        fit = train(st, cfg)
        assert math.sqrt(fit.training_loss_curve[-1]) < 0.05

    def test_loss_monotone_in_smooth_regime(self):
        # full batch and a small step put Adam in its smooth-descent regime;
        # after a short transient the loss must never rise
        st = station(np.linspace(0.0, 1.0, 60))
        cfg = LstmConfig(layers=1, cells=16, dropout=0.0, lookback=4, learning_rate=3e-4,
                         epochs=150, batch_size=1000, seed=1)
        curve = train(st, cfg).training_loss_curve
        assert np.all(np.diff(curve[10:]) <= 1e-12)

    def test_divergence_names_epoch(self):
        st = station(np.linspace(0.0, 1.0, 30))
        cfg = LstmConfig(layers=1, cells=4, dropout=0.0, lookback=4, learning_rate=1e200,
                         epochs=5, batch_size=8, seed=0)
        with pytest.raises(DivergenceError, match="epoch"):
            train(st, cfg)

    def test_insufficient_data_propagates(self):
        st = station(np.arange(5.0))
        with pytest.raises(InsufficientDataError):
            train(st, LstmConfig(lookback=12, epochs=1))


class TestPredictRecursive:
    def _fit(self, values, **kw):
        cfg = LstmConfig(layers=1, cells=8, dropout=0.0, lookback=4, learning_rate=1e-2,
                         epochs=150, batch_size=8, seed=0, **kw)
        return train(station(values), cfg), cfg

    def test_horizon_one_is_single_forward_pass(self):
        fit, cfg = self._fit(np.linspace(0, 1, 40))
        context = np.linspace(0.8, 1.0, cfg.lookback)[:, None]
        got = predict_recursive(fit, context, 1)
        direct, _ = forward(context, fit.weights)
        assert got.tolist() == [direct]

    def test_constant_fit_forecasts_constant(self):
        fit, cfg = self._fit(np.full(30, 0.7))
        context = np.full((cfg.lookback, 1), 0.7)
        preds = predict_recursive(fit, context, 6)
        assert np.allclose(preds, 0.7, atol=0.01)

    def test_prefix_consistency(self):
        fit, cfg = self._fit(np.linspace(0, 1, 40))
        context = np.linspace(0.8, 1.0, cfg.lookback)[:, None]
        short = predict_recursive(fit, context, 3)
        long = predict_recursive(fit, context, 9)
        assert np.array_equal(short, long[:3])

    def test_zero_horizon_is_empty(self):
        fit, cfg = self._fit(np.linspace(0, 1, 40))
        context = np.zeros((cfg.lookback, 1))
        assert predict_recursive(fit, context, 0).size == 0

    def test_wrong_context_length_rejected(self):
        fit, _ = self._fit(np.linspace(0, 1, 40))
        with pytest.raises(ValueError):
            predict_recursive(fit, np.zeros((3, 1)), 2)


class TestGridSearch:
    def _station(self, n=40):
        rng = np.random.default_rng(21)
        return station(0.5 + 0.3 * np.linspace(0, 1, n) + rng.normal(0, 0.02, n))

    def _cfg(self, **kw):
        base = dict(layers=1, cells=4, dropout=0.0, lookback=4, learning_rate=1e-2,
                    epochs=30, batch_size=8, seed=0)
        base.update(kw)
        return LstmConfig(**base)

    def test_singleton_grid(self):
        only = self._cfg()
        best, table = grid_search(self._station(), [only], seed=5)
        assert best == only
        assert len(table) == 1
        assert table[0][1] is not None and table[0][1] >= 0

    def test_duplicate_config_first_declared_wins(self):
        a = self._cfg()
        b = self._cfg()
        best, table = grid_search(self._station(), [a, b], seed=5)
        assert best is a
        assert table[0][1] == table[1][1]

    def test_deterministic_selection(self):
        grid = [self._cfg(cells=4), self._cfg(cells=6), self._cfg(learning_rate=1e-3)]
        first = grid_search(self._station(), grid, seed=7)
        second = grid_search(self._station(), grid, seed=7)
        assert first[0] == second[0]
        assert [s for _, s in first[1]] == [s for _, s in second[1]]

    def test_all_divergent_raises(self):
        grid = [self._cfg(learning_rate=1e200), self._cfg(learning_rate=1e200, cells=6)]
        with pytest.raises(NoViableModelError):
            grid_search(self._station(), grid, seed=1)

    def test_divergent_candidate_scored_none(self):
        grid = [self._cfg(learning_rate=1e200), self._cfg()]
        best, table = grid_search(self._station(), grid, seed=1)
        assert best == grid[1]
        assert table[0][1] is None


class TestConfigValidation:
    def test_bad_layers(self):
        with pytest.raises(ValueError):
            LstmConfig(layers=3)

    def test_bad_dropout(self):
        with pytest.raises(ValueError):
            LstmConfig(dropout=1.0)

    def test_bad_lookback(self):
        with pytest.raises(ValueError):
            LstmConfig(lookback=0)
