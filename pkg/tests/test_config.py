import numpy as np
import pytest

from eigshrink.config import (
    ConfigInvalid,
    ScenarioConfig,
    config_echo_lines,
    load_config,
    parse_config_text,
)

GOOD = """
# Fig-2-like scenario
scenario_id = demo
seed = 42
n_i = 1
q_desired = 16
snr_db_list = 0, 5, 10
inr_db = 0
m_samples = 8
trials = 10
symbols_per_trial = 20
"""


class TestParsing:
    def test_round_trip(self):
        cfg = parse_config_text(GOOD)
        assert cfg.scenario_id == "demo"
        assert cfg.seed == 42
        assert cfg.snr_db_list == (0.0, 5.0, 10.0)
        assert cfg.m_samples == (8,)
        assert cfg.estimators == ("oracle", "practical", "none")

    def test_unknown_key(self):
        with pytest.raises(ConfigInvalid, match="unknown key 'trails'"):
            parse_config_text(GOOD + "trails = 5\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigInvalid, match="duplicate"):
            parse_config_text(GOOD + "seed = 43\n")

    def test_bad_value(self):
        with pytest.raises(ConfigInvalid, match="bad value for 'beta_trials'"):
            parse_config_text(GOOD + "beta_trials = soon\n")

    def test_missing_required(self):
        with pytest.raises(ConfigInvalid, match="missing required key 'seed'"):
            parse_config_text("scenario_id = x\n")

    def test_not_key_value(self):
        with pytest.raises(ConfigInvalid, match="expected 'key = value'"):
            parse_config_text("scenario_id: x\nseed = 1\n")

    def test_comments_and_blank_lines(self):
        cfg = parse_config_text("scenario_id = x  # inline\n\n# full line\nseed = 1\n")
        assert cfg.scenario_id == "x"

    def test_grid_range_syntax(self):
        cfg = parse_config_text(GOOD + "rho_grid = 0:0.05:1\n")
        assert len(cfg.rho_grid) == 21
        assert cfg.rho_grid[0] == 0.0 and cfg.rho_grid[-1] == 1.0
        assert np.allclose(np.diff(cfg.rho_grid), 0.05)

    def test_grid_comma_syntax(self):
        cfg = parse_config_text(GOOD + "rho_grid = 0, 0.25, 1\n")
        assert cfg.rho_grid == (0.0, 0.25, 1.0)

    def test_grid_uneven_range_rejected(self):
        with pytest.raises(ConfigInvalid, match="does not divide evenly"):
            parse_config_text(GOOD + "rho_grid = 0:0.3:1\n")


class TestValidation:
    def test_multi_stream_desired_rejected(self):
        with pytest.raises(ConfigInvalid, match="n_d = 1"):
            parse_config_text(GOOD + "n_d = 2\n")

    def test_bad_modulation_order(self):
        with pytest.raises(ConfigInvalid, match="q_desired"):
            parse_config_text(GOOD + "q_desired = 8\n")

    def test_rho_grid_outside_unit_interval(self):
        with pytest.raises(ConfigInvalid, match="outside"):
            parse_config_text(GOOD + "rho_grid = 0, 1.5\n")

    def test_unknown_estimator(self):
        with pytest.raises(ConfigInvalid, match="unknown estimator"):
            parse_config_text(GOOD + "estimators = oracle, genie\n")

    def test_non_finite_db(self):
        with pytest.raises(ConfigInvalid, match="finite"):
            parse_config_text("scenario_id = x\nseed = 1\ninr_db = nan\n")

    def test_direct_dataclass_validate(self):
        with pytest.raises(ConfigInvalid):
            ScenarioConfig(scenario_id="x", seed=1, trials=0).validate()


class TestLoad:
    def test_missing_file_names_path(self, tmp_path):
        missing = tmp_path / "nope.cfg"
        with pytest.raises(ConfigInvalid, match=str(missing)):
            load_config(str(missing))

    def test_load_from_disk(self, tmp_path):
        p = tmp_path / "ok.cfg"
        p.write_text(GOOD)
        assert load_config(str(p)).scenario_id == "demo"

    def test_echo_lines_are_stable(self):
        cfg = parse_config_text(GOOD)
        lines = config_echo_lines(cfg)
        assert lines == sorted(lines)
        assert any(line.startswith("seed = 42") for line in lines)
