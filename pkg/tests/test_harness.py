import numpy as np
import pytest

from eigshrink.config import ConfigInvalid, parse_config_text
from eigshrink.harness import (
    MIResult,
    format_value,
    mean_stderr,
    mi_result_rows,
    run_eig_bias,
    run_rho_sweep,
    run_snr_sweep,
    write_csv,
)


def make_cfg(**overrides):
    base = dict(
        scenario_id="t",
        seed=99,
        n_i=1,
        q_desired=16,
        snr_db_list=(10.0,),
        inr_db=0.0,
        m_samples=(8,),
        trials=6,
        symbols_per_trial=24,
        beta_trials=1000,
    )
    base.update(overrides)
    lines = []
    for key, val in base.items():
        if isinstance(val, tuple):
            val = ", ".join(str(v) for v in val)
        lines.append(f"{key} = {val}")
    return parse_config_text("\n".join(lines))


@pytest.fixture(autouse=True)
def isolated_beta_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("EIGSHRINK_BETA_CACHE", str(tmp_path / "beta_cache"))


class TestMeanStderr:
    def test_single_value(self):
        assert mean_stderr([2.0]) == (2.0, 0.0)

    def test_matches_numpy(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=100).tolist()
        mean, se = mean_stderr(vals)
        assert mean == pytest.approx(np.mean(vals), abs=1e-12)
        assert se == pytest.approx(np.std(vals, ddof=1) / 10, rel=1e-12)


class TestEigBias:
    def test_trials_floor(self):
        with pytest.raises(ValueError, match="1e4"):
            run_eig_bias(4, [8], 100, 0)

    def test_scalar_dimension_unbiased(self):
        rows = run_eig_bias(1, [8], 10**4, 3)
        assert rows[0]["mean_min_eig"] == pytest.approx(1.0, abs=0.02)
        assert rows[0]["mean_max_eig"] == pytest.approx(1.0, abs=0.02)

    def test_large_window_consistent(self):
        # m -> infinity surrogate: both extremal means approach the truth.
        rows = run_eig_bias(4, [10**4], 10**4, 3)
        assert rows[0]["mean_min_eig"] == pytest.approx(1.0, abs=0.05)
        assert rows[0]["mean_max_eig"] == pytest.approx(1.0, abs=0.05)

    def test_deterministic(self):
        a = run_eig_bias(4, [6, 8], 10**4, 5)
        b = run_eig_bias(4, [6, 8], 10**4, 5)
        assert a == b


class TestRhoSweep:
    def test_policy_guard(self):
        cfg = make_cfg(rho_policy="practical", rho_grid=(0.0, 0.5))
        with pytest.raises(ConfigInvalid, match="rho_policy = fixed"):
            run_rho_sweep(cfg)

    def test_needs_grid(self):
        with pytest.raises(ConfigInvalid, match="rho_grid"):
            run_rho_sweep(make_cfg())

    def test_single_snr_point(self):
        cfg = make_cfg(rho_grid=(0.0, 0.5), snr_db_list=(0.0, 10.0))
        with pytest.raises(ConfigInvalid, match="single SNR"):
            run_rho_sweep(cfg)

    def test_deterministic_rows(self):
        cfg = make_cfg(rho_grid=(0.0, 0.2, 1.0), trials=1)
        assert run_rho_sweep(cfg) == run_rho_sweep(cfg)

    def test_row_layout(self):
        cfg = make_cfg(rho_grid=(0.0, 0.5, 1.0), m_samples=(6, 8))
        rows = run_rho_sweep(cfg)
        assert len(rows) == 6
        assert {(r.m, r.rho) for r in rows} == {
            (m, rho) for m in (6, 8) for rho in (0.0, 0.5, 1.0)
        }
        assert all(r.estimator == "fixed" for r in rows)
        assert all(r.trials == cfg.trials for r in rows)

    def test_zero_rho_column_is_plain_scm(self):
        # The rho = 0 column is the unregularized estimator: scoring the
        # same trial draws against the raw SCM reproduces it exactly.
        from eigshrink.harness import _rho_sweep_trial

        cfg = make_cfg(rho_grid=(0.0, 0.3), m_samples=(8,), trials=1)
        mi, failed = _rho_sweep_trial(cfg, 0)
        from eigshrink.airlink import LinkScales, build_constellation, draw_channel, interference_noise_samples
        from eigshrink.harness import _payload_draws, _score
        from eigshrink.rng import substream
        from eigshrink.shrinkage import sample_covariance

        scales = LinkScales(snr_db=10.0, inr_db=0.0)
        ch = draw_channel(cfg, scales, substream(cfg.seed, 0, "channel"))
        block = interference_noise_samples(ch, 8, 4, substream(cfg.seed, 0, "estimation"))
        cons = build_constellation(16)
        bits, s_d, u = _payload_draws(cfg, ch, cons, substream(cfg.seed, 0, "payload"))
        y = ch.h_d[:, None] * s_d + u
        direct, _ = _score(sample_covariance(block.vectors), y, ch.h_d, bits, cons, 16)
        assert mi[0, 0] == direct

    def test_workers_do_not_change_results(self):
        cfg = make_cfg(rho_grid=(0.0, 0.5), trials=8)
        assert run_rho_sweep(cfg, workers=1) == run_rho_sweep(cfg, workers=2)


class TestSnrSweep:
    def test_single_window_guard(self):
        cfg = make_cfg(m_samples=(6, 8))
        with pytest.raises(ConfigInvalid, match="single estimation window"):
            run_snr_sweep(cfg)

    def test_row_layout_and_ordering_smoke(self):
        cfg = make_cfg(snr_db_list=(0.0, 10.0), trials=30)
        rows = run_snr_sweep(cfg)
        assert len(rows) == 6
        labels = {r.estimator for r in rows}
        assert labels == {"oracle", "practical", "none"}
        by = {(r.estimator, r.snr_db): r.mean_mi for r in rows}
        assert by[("oracle", 10.0)] >= by[("none", 10.0)]

    def test_estimator_subset(self):
        cfg = make_cfg(estimators=("oracle", "none"), trials=3)
        rows = run_snr_sweep(cfg)
        assert {r.estimator for r in rows} == {"oracle", "none"}

    def test_rho_column_semantics(self):
        cfg = make_cfg(trials=4)
        rows = run_snr_sweep(cfg)
        by = {r.estimator: r for r in rows}
        assert np.isnan(by["oracle"].rho)
        assert by["none"].rho == 0.0
        assert 0.0 <= by["practical"].rho <= 1.0

    def test_whitening_failures_scored_zero(self):
        # m < N_R: the unregularized SCM is singular in every trial, so
        # the trial scores zero and the failure is counted; the shrunk
        # and oracle estimators are unaffected.
        cfg = make_cfg(m_samples=(2,), trials=5)
        rows = run_snr_sweep(cfg)
        by = {r.estimator: r for r in rows}
        assert by["none"].whitening_failures == 5
        assert by["none"].mean_mi == 0.0
        assert by["oracle"].whitening_failures == 0
        assert by["practical"].whitening_failures == 0

    def test_workers_do_not_change_results(self):
        cfg = make_cfg(snr_db_list=(0.0, 10.0), trials=8)
        assert run_snr_sweep(cfg, workers=1) == run_snr_sweep(cfg, workers=2)

    def test_oracle_mi_monotone_in_snr(self):
        # The oracle curve is non-decreasing over the SNR grid within one
        # Monte-Carlo standard error.
        cfg = make_cfg(
            snr_db_list=tuple(float(s) for s in range(0, 31, 5)),
            estimators=("oracle",),
            trials=300,
            symbols_per_trial=100,
        )
        rows = run_snr_sweep(cfg, workers=2)
        rows.sort(key=lambda r: r.snr_db)
        for a, b in zip(rows, rows[1:]):
            tol = (a.stderr_mi**2 + b.stderr_mi**2) ** 0.5
            assert b.mean_mi >= a.mean_mi - tol

    def test_sinr_diagnostics_logged_at_debug(self, caplog):
        import logging

        cfg = make_cfg(trials=2)
        with caplog.at_level(logging.DEBUG, logger="eigshrink.harness"):
            run_snr_sweep(cfg)
        diag = [r.message for r in caplog.records if "sinr diagnostics" in r.message]
        assert len(diag) == 2
        assert "tr_inv_true=" in diag[0] and "tr_inv_oracle=" in diag[0]

    def test_beta_cache_reused_across_runs(self, tmp_path):
        from eigshrink.shrinkage import load_beta_cache

        cfg = make_cfg(trials=2)
        run_snr_sweep(cfg)
        cache = load_beta_cache()
        assert len(cache) == 1
        (key,) = cache
        # keyed on the long window: m * m_large_factor
        assert key == (4, 32, 1000, 99)
        run_snr_sweep(cfg)
        assert len(load_beta_cache()) == 1


class TestCsvOutput:
    def test_format_value(self):
        assert format_value(None) == ""
        assert format_value(float("nan")) == ""
        assert format_value(0.25) == "0.25"
        assert format_value(3) == "3"
        assert format_value("x") == "x"

    def test_write_csv_deterministic_bytes(self, tmp_path):
        rows = mi_result_rows(
            [
                MIResult(
                    scenario_id="s",
                    estimator="oracle",
                    snr_db=10.0,
                    inr_db=0.0,
                    m=8,
                    rho=float("nan"),
                    mean_mi=3.25,
                    stderr_mi=0.01,
                    trials=4,
                    whitening_failures=0,
                    seed=7,
                )
            ],
            "rho_mean",
        )
        cols = ("scenario_id", "estimator", "snr_db", "rho_mean", "mean_mi", "seed")
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(p1, cols, rows)
        write_csv(p2, cols, rows)
        body = p1.read_bytes()
        assert body == p2.read_bytes()
        assert body.decode().splitlines()[1] == "s,oracle,10,,3.25,7"
