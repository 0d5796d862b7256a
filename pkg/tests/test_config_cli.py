"""Tests for configuration parsing and the command-line pipelines."""

import json
import os

import numpy as np
import pytest

from sddesim.cli import main
from sddesim.config import (
    ConfigError,
    apply_overrides,
    config_hash,
    load_preset,
    parse_config,
    preset_names,
    validate_config,
)

MINIMAL = {
    "model": {
        "gamma": 5.0, "r": 10.0, "tau": 1.0,
        "feedback": {"variant": "mackey_glass", "p": 8, "q": 1},
        "noise": {"b_const": 0.0},
        "drift_mode": "ito_coupled",
    },
    "noise": {"sigma": 0.0, "lambda_n": 0.0},
    "trajectory": {"dt": 0.01, "t_end": 5.0, "seed": 1, "space": "original"},
    "measure": {"start": 1.0, "length": 4.0, "bins": 20, "lo": 0.0, "hi": 2.0},
    "history": {"constant": 0.5, "space": "original"},
    "outputs": {"dir": "out"},
}


def write_config(tmp_path, raw):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


class TestConfigParsing:
    def test_minimal_roundtrip(self):
        cfg = parse_config(MINIMAL)
        assert cfg.model.tau == 1.0
        assert cfg.noise.sigma == 0.0
        assert cfg.window.end == 5.0
        assert cfg.history_for_space("transformed") == pytest.approx(np.log(0.5))

    def test_unknown_keys_listed(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["trajectory"]["dt_step"] = 0.1
        diags = validate_config(raw)
        assert any("dt_step" in d and "valid keys" in d for d in diags)

    def test_tau_dt_alignment_diagnosed(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["trajectory"]["dt"] = 0.0003
        raw["trajectory"]["t_end"] = 0.3
        raw["measure"] = {"start": 0.0, "length": 0.3}
        diags = validate_config(raw)
        assert any("tau/dt must be integral" in d for d in diags)

    def test_window_beyond_horizon_diagnosed(self):
        raw = json.loads(json.dumps(MINIMAL))
        raw["measure"]["length"] = 100.0
        diags = validate_config(raw)
        assert any("beyond" in d for d in diags)

    def test_bounds_drift_condition_diagnosed(self):
        raw = {
            "noise": {"sigma": 1.0, "lambda_n": 1.0, "zeta": 1.0},
            "bounds": {"alpha": 0.5, "beta": 1.0, "statistic": "reverse_sup",
                       "horizon": 10, "R_grid": [10.0]},
        }
        diags = validate_config(raw)
        assert any("relaxed drift condition" in d for d in diags)

    def test_preset_configs_validate_clean(self):
        for name in preset_names():
            load_preset(name)  # raises on any diagnostic

    def test_overrides(self):
        raw = apply_overrides(MINIMAL, ["trajectory.dt=0.005", "outputs.dir=elsewhere"])
        assert raw["trajectory"]["dt"] == 0.005
        assert raw["outputs"]["dir"] == "elsewhere"
        assert MINIMAL["trajectory"]["dt"] == 0.01  # original untouched

    def test_bad_override_rejected(self):
        with pytest.raises(ConfigError, match="path=value"):
            apply_overrides(MINIMAL, ["nonsense"])

    def test_hash_stable_and_sensitive(self):
        h1 = config_hash(MINIMAL)
        h2 = config_hash(json.loads(json.dumps(MINIMAL)))
        assert h1 == h2
        h3 = config_hash(apply_overrides(MINIMAL, ["trajectory.seed=2"]))
        assert h3 != h1

    def test_model_and_noise_serialization_roundtrip(self):
        from sddesim.config import model_to_raw, noise_to_raw
        from sddesim.models import ClampedCoupling, Rate

        cfg = parse_config(MINIMAL)
        raw = {"model": model_to_raw(cfg.model), "noise": noise_to_raw(cfg.noise),
               "trajectory": MINIMAL["trajectory"]}
        again = parse_config(raw)
        assert again.model == cfg.model
        assert again.noise == cfg.noise
        # piecewise rate and clamped coupling survive the round trip too
        from sddesim.config import _identity
        from sddesim.models import MackeyGlass, ModelSpec
        fancy = ModelSpec(gamma=Rate(values=(2.0, 3.0), breaks=(1.0,)), r=4.0,
                          tau=0.5, feedback=MackeyGlass(p=4),
                          b_coupling=ClampedCoupling(h=_identity, bound=0.2))
        back = parse_config({"model": model_to_raw(fancy)}).model
        assert back == fancy

    def test_vacuous_bound_warning(self, capsys):
        from sddesim.config import config_warnings, load_preset

        cfg = load_preset("bounds_window_brownian",
                          ["bounds.R_grid=[0.5, 4.0]"])
        warnings = config_warnings(cfg)
        assert any("vacuous" in w and "0.5" in w for w in warnings)


class TestCliCommands:
    def test_validate_ok(self, tmp_path, capsys):
        path = write_config(tmp_path, MINIMAL)
        assert main(["validate", "--config", path]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_failure_exit_code(self, tmp_path, capsys):
        raw = json.loads(json.dumps(MINIMAL))
        raw["trajectory"]["dt"] = 0.0003
        raw["trajectory"]["t_end"] = 0.3
        raw["measure"] = {"start": 0.0, "length": 0.3}
        path = write_config(tmp_path, raw)
        assert main(["validate", "--config", path]) == 1
        assert "integral" in capsys.readouterr().out

    def test_simulate_writes_provenance_header(self, tmp_path, capsys):
        path = write_config(tmp_path, MINIMAL)
        out = str(tmp_path / "res")
        assert main(["simulate", "--config", path, "--out", out]) == 0
        with open(os.path.join(out, "timeseries.csv")) as fh:
            first = fh.readline()
        assert first.startswith("# sddesim v")
        assert "config=" in first

    def test_measure_and_phase(self, tmp_path):
        path = write_config(tmp_path, MINIMAL)
        out = str(tmp_path / "res")
        assert main(["measure", "--config", path, "--out", out]) == 0
        assert main(["phase", "--config", path, "--out", out]) == 0
        hist = np.loadtxt(os.path.join(out, "histogram.csv"), delimiter=",",
                          skiprows=2)
        assert hist.shape == (20, 3)
        assert abs(hist[:, 2].sum() - 1.0) < 1e-9
        assert os.path.exists(os.path.join(out, "phase_matrix.csv"))

    def test_stability_command(self, tmp_path, capsys):
        path = write_config(tmp_path, MINIMAL)
        out_file = str(tmp_path / "stab.txt")
        assert main(["stability", "--config", path, "--out-file", out_file]) == 0
        text = capsys.readouterr().out
        assert "regime = (ii)-unstable" in text
        assert os.path.exists(out_file)

    def test_bounds_command(self, tmp_path, capsys):
        out = str(tmp_path / "res")
        code = main(["bounds", "--config", "bounds_window_brownian",
                     "--out", out, "-o", "bounds.n_samples=500"])
        assert code == 0
        data = np.loadtxt(os.path.join(out, "bounds.csv"), delimiter=",",
                          skiprows=2)
        assert data.shape[0] == 4  # R grid of the preset
        assert os.path.exists(os.path.join(out, "verification.csv"))

    def test_figures_fig1_shortened(self, tmp_path):
        out = str(tmp_path / "fig1")
        code = main(["figures", "fig1", "--out", out,
                     "-o", "trajectory.t_end=20",
                     "-o", "trajectory.burn_in=10",
                     "-o", "measure.start=10", "-o", "measure.length=10"])
        assert code == 0
        for name in ("timeseries.csv", "histogram.csv", "phase.csv",
                     "phase_matrix.csv"):
            assert os.path.exists(os.path.join(out, name))
        ts = np.loadtxt(os.path.join(out, "timeseries.csv"), delimiter=",",
                        skiprows=2)
        assert ts[0, 0] == pytest.approx(-1.0)  # history included
        assert ts[-1, 0] <= 20.0 + 1e-9

    def test_unknown_preset_rejected(self, capsys):
        assert main(["validate", "--config", "not_a_preset.json"]) == 1

    def test_seed_override_changes_output(self, tmp_path):
        raw = json.loads(json.dumps(MINIMAL))
        raw["model"]["noise"]["b_const"] = 0.1
        raw["noise"]["sigma"] = 1.0
        path = write_config(tmp_path, raw)
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["simulate", "--config", path, "--out", out1, "--seed", "7"]) == 0
        assert main(["simulate", "--config", path, "--out", out2, "--seed", "8"]) == 0
        a = open(os.path.join(out1, "timeseries.csv")).read()
        b = open(os.path.join(out2, "timeseries.csv")).read()
        assert a != b


class TestReproducibility:
    def test_identical_config_identical_bytes(self, tmp_path):
        raw = json.loads(json.dumps(MINIMAL))
        raw["model"]["noise"]["b_const"] = 0.05
        raw["noise"]["sigma"] = 1.0
        raw["n_trajectories"] = 3
        path = write_config(tmp_path, raw)
        outs = []
        for sub, workers in (("w1", "1"), ("w4", "4")):
            out = str(tmp_path / sub)
            assert main(["simulate", "--config", path, "--out", out,
                         "--workers", workers]) == 0
            outs.append(open(os.path.join(out, "timeseries.csv"), "rb").read())
        assert outs[0] == outs[1]
