"""Flat key-value experiment configuration (YAML file + CLI overrides)."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import InvalidArgumentError


class ConfigError(InvalidArgumentError):
    pass


FIG1_COEFFS = [0.7, 0.05, 0.0, 0.3, 0.0, -0.3]


@dataclass
class ExperimentConfig:
    """Every key a run may carry. Unknown keys are rejected.

    Time is measured in units of ``delta_t``; ``time_unit`` is only a label
    written into outputs.
    """

    scenario: str = "custom"
    # noise model: list of AR coefficients, or "fit-from-files"
    ar_coeffs: Any = field(default_factory=lambda: list(FIG1_COEFFS))
    innovation_variance: float = 1.0
    # sampling
    delta_t: float = 1.0
    n_grid: int = 1024
    n_keep: int | None = 103
    sampling_seed: int = 0
    times_file: str | None = None
    training_grid: str = "regular"
    time_unit: str = "dt"
    # frequency grid
    oversample: int = 1
    # bootstrap
    L: int = 20
    B: int = 100
    b: int = 500
    max_order: int = 20
    variant: str = "b0"
    seed: int = 0
    threads: int | None = None
    # signal injection
    inject_amplitude: float = 0.0
    inject_frequency: float = 0.0
    inject_phase: float = 0.0
    # oracle / baseline / test
    n_mc: int = 100_000
    n_perm: int = 1000
    targets: list = field(default_factory=lambda: [0.1, 0.5, 0.9])
    marginal_draws: int = 2000
    n_gamma: int = 200
    gamma_ref: float | None = None
    sweep_b: list = field(default_factory=lambda: [50, 100, 200, 500])
    sweep_B: list = field(default_factory=lambda: [50])
    # files
    train_files: Any = None
    observation_file: str | None = None
    calibration_file: str | None = None
    oracle_file: str | None = None
    out: str = "out"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def echo(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def fit_from_files(self) -> bool:
        return self.ar_coeffs == "fit-from-files"

    def validate(self) -> "ExperimentConfig":
        if not (self.fit_from_files or isinstance(self.ar_coeffs, (list, tuple))):
            raise ConfigError("ar_coeffs must be a list of numbers or 'fit-from-files'")
        if self.training_grid not in ("regular", "analysis"):
            raise ConfigError("training_grid must be 'regular' or 'analysis'")
        if self.variant not in ("b0", "bstar"):
            raise ConfigError(f"variant must be b0 or bstar, got {self.variant!r}")
        if self.variant == "bstar" and self.b < 20:
            raise ConfigError(f"variant bstar needs b >= 20 maxima per replicate, got b={self.b}")
        for name in ("n_grid", "L", "B", "b", "max_order", "n_mc", "n_perm", "oversample", "n_gamma"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not all(0 < float(t) < 1 for t in self.targets):
            raise ConfigError("targets must lie in (0, 1)")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}

SCENARIOS: dict[str, dict] = {
    # AR(6) colored noise, 103 of 1024 grid points, L = 20
    "fig1": {"ar_coeffs": FIG1_COEFFS, "n_grid": 1024, "n_keep": 103, "L": 20, "B": 100, "b": 500},
    # reduced grid for quick runs
    "fig1-small": {"ar_coeffs": FIG1_COEFFS, "n_grid": 256, "n_keep": 60, "L": 20, "B": 50, "b": 500},
    # b0 vs bstar dispersion against compute
    "fig2": {
        "ar_coeffs": FIG1_COEFFS,
        "n_grid": 1024,
        "n_keep": 103,
        "L": 20,
        "variant": "bstar",
        "sweep_b": [50, 100, 200, 500, 1000],
        "sweep_B": [50],
    },
    "white": {"ar_coeffs": [], "n_grid": 1024, "n_keep": 103, "L": 20},
    # injected sinusoid on even sampling: frequencies in cycles per delta_t
    "inject": {
        "ar_coeffs": FIG1_COEFFS,
        "n_grid": 512,
        "n_keep": None,
        "L": 20,
        "inject_amplitude": 1.0,
        "inject_frequency": 0.125,
    },
}


def _coerce(name: str, value):
    if value is None:
        return None
    default = _FIELDS[name].default
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int) and not isinstance(value, str):
        if float(value) != int(value):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then scenario preset, then config-file keys, then overrides."""
    merged: dict = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    values = dict(SCENARIOS.get(merged.get("scenario", "custom"), {}))
    if "scenario" in merged and merged["scenario"] not in SCENARIOS and merged["scenario"] != "custom":
        raise ConfigError(f"unknown scenario {merged['scenario']!r}; known: {sorted(SCENARIOS)}")
    values.update(merged)
    try:
        cfg = ExperimentConfig(**{k: _coerce(k, v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config_file(path: str | Path) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a flat key-value mapping")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(f"{path}: key {key!r} is nested; config keys are flat")
    return data


def parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)
