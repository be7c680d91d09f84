import numpy as np
import pytest

from airbench.cli import main
from airbench.io import load_csv
from airbench.series import PollutantKind

DESK_CFG = """\
# desk-scale run
lstm_layers=1
lstm_cells=4
lstm_learning_rates=0.01
lstm_epochs=15
lstm_batch_size=8
lstm_lookback=6
lstm_dropout=0.2
n_changepoints=5
"""


@pytest.fixture
def desk_cfg(tmp_path):
    path = tmp_path / "desk.cfg"
    path.write_text(DESK_CFG)
    return str(path)


class TestSynthCommand:
    def test_writes_requested_series(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code = main(["synth", "--regime", "seasonal", "--seeds", "0..4", "--out", str(out)])
        assert code == 0
        ds = load_csv(out)
        assert len(ds) == 5
        assert all(s.pollutant is PollutantKind.CO for s in ds)

    def test_single_seed(self, tmp_path):
        out = tmp_path / "one.csv"
        assert main(["synth", "--regime", "constant", "--seeds", "3", "--out", str(out)]) == 0
        assert len(load_csv(out)) == 1

    def test_regime_break_and_overrides(self, tmp_path):
        out = tmp_path / "b.csv"
        code = main([
            "synth", "--regime", "break", "--seeds", "0", "--out", str(out),
            "--months", "36", "--break-index", "20", "--sigma", "0",
        ])
        assert code == 0
        station = next(iter(load_csv(out)))
        assert len(station.target) == 36
        assert station.pollutant is PollutantKind.SO4

    def test_bad_seed_range_is_usage_error(self, tmp_path, capsys):
        code = main(["synth", "--regime", "seasonal", "--seeds", "x..y",
                     "--out", str(tmp_path / "s.csv")])
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestBenchCommand:
    def test_end_to_end(self, tmp_path, desk_cfg, capsys):
        data = tmp_path / "s.csv"
        assert main(["synth", "--regime", "seasonal", "--seeds", "0..1",
                     "--out", str(data), "--months", "36"]) == 0
        out_dir = tmp_path / "out"
        code = main(["bench", "--input", str(data), "--config", desk_cfg,
                     "--out-dir", str(out_dir), "--seed", "7"])
        assert code == 0
        lines = (out_dir / "results.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 2
        assert (out_dir / "run_manifest.txt").exists()

    def test_missing_input_is_data_error(self, tmp_path, capsys):
        code = main(["bench", "--input", str(tmp_path / "nope.csv"),
                     "--out-dir", str(tmp_path / "out")])
        assert code == 2
        assert "data error" in capsys.readouterr().err

    def test_malformed_csv_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("date,state,pollutant,value,wind_speed,temperature,rainfall\nnope\n")
        code = main(["bench", "--input", str(bad), "--out-dir", str(tmp_path / "out")])
        assert code == 2

    def test_unknown_config_key_is_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("frobnicate=1\n")
        data = tmp_path / "s.csv"
        main(["synth", "--regime", "seasonal", "--seeds", "0", "--out", str(data)])
        code = main(["bench", "--input", str(data), "--config", str(cfg),
                     "--out-dir", str(tmp_path / "out")])
        assert code == 1


class TestEvalCommand:
    def _write_values(self, path, values):
        path.write_text("date,value\n" + "\n".join(
            f"2023-{i+1:02d},{v!r}" for i, v in enumerate(values)
        ) + "\n")

    def test_identical_files_score_zero(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        self._write_values(a, [1.0, 2.0, 3.0])
        code = main(["eval", "--actual", str(a), "--predicted", str(a)])
        assert code == 0
        out = capsys.readouterr().out
        assert "rmse 0.00000e+00" in out
        assert "r2 1.00000e+00" in out

    def test_mismatched_lengths_is_data_error(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        self._write_values(a, [1.0, 2.0])
        self._write_values(b, [1.0, 2.0, 3.0])
        assert main(["eval", "--actual", str(a), "--predicted", str(b)]) == 2


class TestForecastCommand:
    def test_writes_horizon_rows(self, tmp_path, desk_cfg):
        data = tmp_path / "s.csv"
        main(["synth", "--regime", "seasonal", "--seeds", "0", "--out", str(data),
              "--months", "36"])
        out = tmp_path / "fc.csv"
        code = main([
            "forecast", "--input", str(data), "--state", "SEED000", "--pollutant", "CO",
            "--model", "both", "--horizon", "6", "--out", str(out),
            "--config", desk_cfg,
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        # 6 horizon months x (lstm, additive, trend, seasonal)
        assert len(lines) == 1 + 6 * 4
        assert lines[1].split(",")[0] == "2021-01"

    def test_unknown_series_is_data_error(self, tmp_path, capsys):
        data = tmp_path / "s.csv"
        main(["synth", "--regime", "seasonal", "--seeds", "0", "--out", str(data)])
        code = main(["forecast", "--input", str(data), "--state", "NOPE",
                     "--pollutant", "CO", "--horizon", "3",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 2


class TestUsageErrors:
    def test_unknown_flag_exits_one_with_usage(self, capsys):
        code = main(["bench", "--frobnicate"])
        assert code == 1
        err = capsys.readouterr().err
        assert "usage" in err

    def test_no_subcommand_exits_one(self, capsys):
        assert main([]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "bench" in capsys.readouterr().out
