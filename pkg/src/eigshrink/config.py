"""Experiment configuration: flat key-value files with a strict schema.

A config file is a plain text document of ``key = value`` lines.  Blank
lines are skipped and ``#`` starts a comment.  Unknown keys are errors:
silent typos in experiment configs are the classic reproducibility
failure.  Lists are comma separated; a grid can also be written as
``start:step:stop`` (inclusive endpoints).
"""

from dataclasses import dataclass, fields
import math

import numpy as np

SUPPORTED_QAM = (4, 16, 64)
ESTIMATOR_CHOICES = ("oracle", "practical", "none")
RHO_POLICY_CHOICES = ("none", "oracle_true", "oracle_grid_mi", "practical", "fixed")
LAMBDA_ESTIMATOR_CHOICES = ("bound", "exact")


class ConfigInvalid(Exception):
    """Config file is missing, malformed, or violates the schema."""


@dataclass
class ScenarioConfig:
    """Full description of one experiment scenario."""

    scenario_id: str
    seed: int
    n_r: int = 4
    n_d: int = 1
    n_i: int = 1
    q_desired: int = 16
    q_interferer: int = 4
    snr_db_list: tuple = (10.0,)
    inr_db: float = 0.0
    m_samples: tuple = (8,)
    rho_policy: str = "fixed"
    rho_grid: tuple = ()
    estimators: tuple = ESTIMATOR_CHOICES
    trials: int = 2000
    symbols_per_trial: int = 200
    m_large_factor: int = 4
    beta_trials: int = 20000
    lambda_estimator: str = "bound"

    def validate(self):
        if not self.scenario_id:
            raise ConfigInvalid("scenario_id must be non-empty")
        if self.seed < 0:
            raise ConfigInvalid("seed must be a non-negative integer")
        if self.n_d != 1:
            raise ConfigInvalid("only single-stream desired signal is supported (n_d = 1)")
        if self.n_r < 1:
            raise ConfigInvalid("n_r must be at least 1")
        if self.n_i < 0:
            raise ConfigInvalid("n_i must be non-negative")
        for q, name in ((self.q_desired, "q_desired"), (self.q_interferer, "q_interferer")):
            if q not in SUPPORTED_QAM:
                raise ConfigInvalid(f"{name} must be one of {SUPPORTED_QAM}, got {q}")
        if not self.snr_db_list:
            raise ConfigInvalid("snr_db_list must be non-empty")
        for v in list(self.snr_db_list) + [self.inr_db]:
            if not math.isfinite(v):
                raise ConfigInvalid("dB values must be finite")
        if not self.m_samples or any(m < 1 for m in self.m_samples):
            raise ConfigInvalid("m_samples must be positive integers")
        if self.rho_policy not in RHO_POLICY_CHOICES:
            raise ConfigInvalid(f"rho_policy must be one of {RHO_POLICY_CHOICES}")
        for rho in self.rho_grid:
            if not 0.0 <= rho <= 1.0:
                raise ConfigInvalid(f"rho grid value {rho} outside [0, 1]")
        if not self.estimators:
            raise ConfigInvalid("estimators must be non-empty")
        for est in self.estimators:
            if est not in ESTIMATOR_CHOICES:
                raise ConfigInvalid(f"unknown estimator {est!r}; choose from {ESTIMATOR_CHOICES}")
        if self.trials < 1:
            raise ConfigInvalid("trials must be at least 1")
        if self.symbols_per_trial < 1:
            raise ConfigInvalid("symbols_per_trial must be at least 1")
        if self.m_large_factor < 1:
            raise ConfigInvalid("m_large_factor must be at least 1")
        if self.beta_trials < 1000:
            raise ConfigInvalid("beta_trials must be at least 1000")
        if self.lambda_estimator not in LAMBDA_ESTIMATOR_CHOICES:
            raise ConfigInvalid(f"lambda_estimator must be one of {LAMBDA_ESTIMATOR_CHOICES}")
        return self


def _parse_int(text):
    return int(text)


def _parse_float(text):
    return float(text)


def _parse_str(text):
    return text


def _parse_int_list(text):
    return tuple(int(t.strip()) for t in text.split(",") if t.strip())


def _parse_float_list(text):
    return tuple(float(t.strip()) for t in text.split(",") if t.strip())


def _parse_str_list(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _parse_grid(text):
    """Comma list, or inclusive ``start:step:stop`` range."""
    if ":" in text:
        parts = [p.strip() for p in text.split(":")]
        if len(parts) != 3:
            raise ValueError(f"range syntax is start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"invalid range {text!r}")
        count = (stop - start) / step
        if abs(count - round(count)) > 1e-9:
            raise ValueError(f"range {text!r} does not divide evenly")
        return tuple(np.linspace(start, stop, int(round(count)) + 1))
    return _parse_float_list(text)


_PARSERS = {
    "scenario_id": _parse_str,
    "seed": _parse_int,
    "n_r": _parse_int,
    "n_d": _parse_int,
    "n_i": _parse_int,
    "q_desired": _parse_int,
    "q_interferer": _parse_int,
    "snr_db_list": _parse_float_list,
    "inr_db": _parse_float,
    "m_samples": _parse_int_list,
    "rho_policy": _parse_str,
    "rho_grid": _parse_grid,
    "estimators": _parse_str_list,
    "trials": _parse_int,
    "symbols_per_trial": _parse_int,
    "m_large_factor": _parse_int,
    "beta_trials": _parse_int,
    "lambda_estimator": _parse_str,
}

_REQUIRED = ("scenario_id", "seed")


def parse_config_text(text, source="<string>"):
    """Parse config file contents into a validated :class:`ScenarioConfig`."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _PARSERS:
            raise ConfigInvalid(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigInvalid(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    for key in _REQUIRED:
        if key not in values:
            raise ConfigInvalid(f"{source}: missing required key {key!r}")
    return ScenarioConfig(**values).validate()


def load_config(path):
    """Load and validate a config file; unknown keys are errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigInvalid(f"config file not found: {path}") from None
    return parse_config_text(text, source=str(path))


def config_echo_lines(cfg):
    """Stable ``key = value`` echo of a config, for the run manifest."""
    lines = []
    for f in sorted(fields(cfg), key=lambda f: f.name):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return lines
