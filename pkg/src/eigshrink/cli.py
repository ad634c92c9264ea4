"""Command-line entry point.

    eigshrink <subcommand> --config <path> [--seed N] [--out DIR]
              [--workers K] [--dry-run]

Subcommands: ``eig-bias``, ``rho-sweep``, ``snr-sweep``,
``calibrate-beta``.  Results land in ``<out>/<scenario_id>/`` as a CSV
plus a run manifest.  Exit codes: 0 success, 2 config error, 3 runtime
failure.
"""

import argparse
import dataclasses
import os
import sys
import traceback

from .config import ConfigInvalid, load_config
from .harness import (
    EIG_BIAS_COLUMNS,
    RHO_SWEEP_COLUMNS,
    SNR_SWEEP_COLUMNS,
    mi_result_rows,
    output_dir,
    run_eig_bias,
    run_rho_sweep,
    run_snr_sweep,
    write_csv,
    write_manifest,
)
from .shrinkage import beta_cached

SUBCOMMANDS = ("eig-bias", "rho-sweep", "snr-sweep", "calibrate-beta")


def _planned_points(command, cfg):
    if command == "eig-bias":
        return len(cfg.m_samples)
    if command == "rho-sweep":
        return len(cfg.m_samples) * len(cfg.rho_grid)
    if command == "snr-sweep":
        return len(cfg.snr_db_list) * len(cfg.estimators)
    return len(cfg.m_samples)


def _dispatch(command, cfg, workers):
    if command == "eig-bias":
        rows = run_eig_bias(cfg.n_r, cfg.m_samples, cfg.trials, cfg.seed)
        for row in rows:
            row.update(scenario_id=cfg.scenario_id, seed=cfg.seed)
        return EIG_BIAS_COLUMNS, rows
    if command == "rho-sweep":
        return RHO_SWEEP_COLUMNS, mi_result_rows(run_rho_sweep(cfg, workers), "rho")
    if command == "snr-sweep":
        return SNR_SWEEP_COLUMNS, mi_result_rows(run_snr_sweep(cfg, workers), "rho_mean")
    # calibrate-beta: one record per window length, persisted to the cache.
    rows = []
    for m in cfg.m_samples:
        cal = beta_cached(cfg.n_r, m, trials=cfg.beta_trials, seed=cfg.seed)
        rows.append(
            {
                "scenario_id": cfg.scenario_id,
                "n": cal.n,
                "m": cal.m,
                "trials": cal.trials,
                "seed": cal.seed,
                "beta": cal.beta,
            }
        )
    return ("scenario_id", "n", "m", "trials", "seed", "beta"), rows


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="eigshrink",
        description="Covariance-shrinkage IRC link experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the scenario config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="output root directory")
        p.add_argument("--workers", type=int, default=1, help="trial worker processes")
        p.add_argument("--dry-run", action="store_true", help="validate and plan only")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigInvalid("--seed must be non-negative")
            cfg = dataclasses.replace(cfg, seed=args.seed).validate()
        if args.workers < 1:
            raise ConfigInvalid("--workers must be at least 1")
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.dry_run:
        points = _planned_points(args.command, cfg)
        print(
            f"dry-run: {args.command} on scenario {cfg.scenario_id!r}: "
            f"{points} grid points x {cfg.trials} trials "
            f"({points * cfg.trials} trial evaluations); nothing written"
        )
        return 0

    try:
        columns, rows = _dispatch(args.command, cfg, args.workers)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3

    out = output_dir(args.out, cfg.scenario_id)
    csv_path = os.path.join(out, f"{args.command}.csv")
    write_csv(csv_path, columns, rows)
    write_manifest(
        os.path.join(out, "manifest.txt"),
        args.command,
        args.config,
        cfg,
        seed_overridden=args.seed is not None,
        workers=args.workers,
    )
    print(f"wrote {csv_path}")
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
