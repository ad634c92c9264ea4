import os

import pytest

from eigshrink.cli import main

CONFIG = """
scenario_id = clitest
seed = 5
n_i = 1
q_desired = 16
snr_db_list = 0, 10
inr_db = 0
m_samples = 8
trials = 6
symbols_per_trial = 16
beta_trials = 1000
"""


@pytest.fixture(autouse=True)
def isolated_beta_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("EIGSHRINK_BETA_CACHE", str(tmp_path / "beta_cache"))


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "scenario.cfg"
    p.write_text(CONFIG)
    return str(p)


def run_cli(*args):
    return main(list(args))


class TestConfigErrors:
    def test_missing_config_file_names_path(self, tmp_path, capsys):
        missing = str(tmp_path / "absent.cfg")
        assert run_cli("snr-sweep", "--config", missing) == 2
        assert missing in capsys.readouterr().err

    def test_unknown_key_is_config_error(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text(CONFIG + "bogus = 1\n")
        assert run_cli("snr-sweep", "--config", str(p)) == 2

    def test_dispatch_validation_is_config_error(self, cfg_path):
        # snr-sweep config lacks a rho grid, so rho-sweep must refuse it.
        assert run_cli("rho-sweep", "--config", cfg_path) == 2

    def test_negative_seed_rejected(self, cfg_path):
        assert run_cli("snr-sweep", "--config", cfg_path, "--seed", "-3") == 2


class TestDryRun:
    def test_prints_plan_and_writes_nothing(self, cfg_path, tmp_path, capsys):
        out = str(tmp_path / "out")
        code = run_cli("snr-sweep", "--config", cfg_path, "--out", out, "--dry-run")
        assert code == 0
        msg = capsys.readouterr().out
        assert "dry-run" in msg and "6 grid points" in msg and "6 trials" in msg
        assert not os.path.exists(out)


class TestRuns:
    def test_snr_sweep_writes_csv_and_manifest(self, cfg_path, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert run_cli("snr-sweep", "--config", cfg_path, "--out", out) == 0
        csv_path = os.path.join(out, "clitest", "snr-sweep.csv")
        manifest = os.path.join(out, "clitest", "manifest.txt")
        assert os.path.exists(csv_path) and os.path.exists(manifest)
        header = open(csv_path).readline().strip().split(",")
        assert header == [
            "scenario_id", "estimator", "snr_db", "inr_db", "m", "rho_mean",
            "mean_mi", "stderr_mi", "trials", "whitening_failures", "seed",
        ]
        body = open(csv_path).read()
        assert body.count("\n") == 7  # header + 3 estimators x 2 SNRs

    def test_seed_override_recorded_in_manifest(self, cfg_path, tmp_path):
        out = str(tmp_path / "out")
        assert run_cli("snr-sweep", "--config", cfg_path, "--out", out, "--seed", "77") == 0
        manifest = open(os.path.join(out, "clitest", "manifest.txt")).read()
        assert "seed = 77 (overridden via --seed)" in manifest

    def test_eig_bias_run(self, tmp_path):
        p = tmp_path / "eig.cfg"
        p.write_text("scenario_id = eb\nseed = 2\nn_r = 4\nm_samples = 8\ntrials = 10000\n")
        out = str(tmp_path / "out")
        assert run_cli("eig-bias", "--config", str(p), "--out", out) == 0
        lines = open(os.path.join(out, "eb", "eig-bias.csv")).read().splitlines()
        assert lines[0] == "scenario_id,n,m,trials,mean_min_eig,mean_max_eig,seed"
        assert len(lines) == 2

    def test_calibrate_beta_run(self, cfg_path, tmp_path):
        out = str(tmp_path / "out")
        assert run_cli("calibrate-beta", "--config", cfg_path, "--out", out) == 0
        lines = open(os.path.join(out, "clitest", "calibrate-beta.csv")).read().splitlines()
        assert lines[0] == "scenario_id,n,m,trials,seed,beta"
        assert len(lines) == 2
        from eigshrink.shrinkage import load_beta_cache

        assert (4, 8, 1000, 5) in load_beta_cache()

    def test_runtime_failure_exits_3(self, cfg_path, monkeypatch, tmp_path):
        def boom(cfg, workers):
            raise RuntimeError("induced")

        monkeypatch.setattr("eigshrink.cli.run_snr_sweep", boom)
        assert run_cli("snr-sweep", "--config", cfg_path, "--out", str(tmp_path / "o")) == 3


class TestDeterminism:
    def test_repeat_runs_byte_identical(self, cfg_path, tmp_path):
        out1, out2 = str(tmp_path / "o1"), str(tmp_path / "o2")
        assert run_cli("snr-sweep", "--config", cfg_path, "--out", out1) == 0
        assert run_cli("snr-sweep", "--config", cfg_path, "--out", out2) == 0
        a = open(os.path.join(out1, "clitest", "snr-sweep.csv"), "rb").read()
        b = open(os.path.join(out2, "clitest", "snr-sweep.csv"), "rb").read()
        assert a == b

    def test_worker_counts_byte_identical(self, cfg_path, tmp_path):
        out1, out2 = str(tmp_path / "w1"), str(tmp_path / "w2")
        p = tmp_path / "rho.cfg"
        p.write_text(
            "scenario_id = clitest\nseed = 5\nn_i = 1\nq_desired = 16\n"
            "snr_db_list = 10\ninr_db = 0\nm_samples = 8\ntrials = 6\n"
            "symbols_per_trial = 16\nrho_grid = 0:0.5:1\n"
        )
        assert run_cli("rho-sweep", "--config", str(p), "--out", out1, "--workers", "1") == 0
        assert run_cli("rho-sweep", "--config", str(p), "--out", out2, "--workers", "2") == 0
        a = open(os.path.join(out1, "clitest", "rho-sweep.csv"), "rb").read()
        b = open(os.path.join(out2, "clitest", "rho-sweep.csv"), "rb").read()
        assert a == b
