"""Experiment configuration: strict JSON files with per-figure defaults."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, ValidationError

EXPERIMENTS = ("fig10", "fig11", "fig12", "fig13", "fig14", "custom")

# Shared RF defaults; dBm only appears here and at the output boundary.
BASE_SCENARIO = {
    "carrier_frequency": 2.4e9,  # Hz
    "noise_power_dbm": -80.0,
    "spacing": 0.5,  # wavelengths
    "theta_max": math.pi / 6,  # rad
    "rho": 0.5,
    "tx_power_dbm": 10.0,
}

# Figure-specific deviations from the shared defaults plus extra knobs.
FIGURE_SCENARIO = {
    "fig10": {"rho": 1.0, "snr_db": 15.0, "total_slots": 64, "blocks": 8, "scatterers": 3},
    "fig11": {"user_distance": 15.0, "user_offset_deg": 75.0},
    "fig12": {"users": 4, "user_offset_deg": 50.0, "scatterers": 8, "rcs_std": 50.0},
    "fig13": {"rho": 2.0, "users": 4, "user_offset_deg": 50.0, "scatterers": 8, "rcs_std": 50.0,
              "bandwidth": 40e6, "cp_length": 6},
    "fig14": {"rho": 2.0, "noise_power_dbm": -60.0, "user_azimuths_deg": [30.0, -50.0, -10.0],
              "user_distance": 50.0, "target_center": [34.64101615137755, 20.0, -10.0],
              "target_radius": 5.0, "target_samples": 8},
    "custom": {"user_distance": 15.0, "user_offset_deg": 75.0},
}

SWEEPS = {
    "fig10": ("N", [8, 16, 32]),
    "fig11": ("N", sorted({int(v) for v in np.round(np.logspace(0, np.log10(4096), 25))})),
    "fig12": ("rho", [0.5, 1.0, 2.0, 4.0]),
    "fig13": ("L", [16, 32, 64, 128]),
    "fig14": ("R_min", [2.0, 4.0, 6.0, 8.0]),
    "custom": ("N", [4, 16, 64]),
}

CUSTOM_SWEEPS = ("N", "rho", "theta_max", "user_offset_deg")

TRIALS = {"fig10": 20, "fig11": 20, "fig12": 100, "fig13": 3, "fig14": 1, "custom": 10}

FIELDS = ("experiment", "scenario", "sweep", "trials", "seed", "output", "format")


@dataclass
class ExperimentConfig:
    experiment: str
    scenario: dict = field(default_factory=dict)
    sweep_name: str = ""
    sweep_values: list = field(default_factory=list)
    trials: int = 1
    seed: int = 0
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        bad = []
        if self.experiment not in EXPERIMENTS:
            bad.append(f"experiment: must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not self.sweep_values:
            bad.append("sweep.values: must be non-empty")
        if not isinstance(self.trials, int) or isinstance(self.trials, bool) or self.trials < 1:
            bad.append(f"trials: must be an integer >= 1, got {self.trials!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            bad.append(f"seed: must be a non-negative integer, got {self.seed!r}")
        if self.format not in ("csv", "json"):
            bad.append(f"format: must be csv or json, got {self.format!r}")
        if self.experiment == "custom" and self.sweep_name not in CUSTOM_SWEEPS:
            bad.append(f"sweep.name: custom sweeps one of {CUSTOM_SWEEPS}")
        elif self.experiment in SWEEPS and self.experiment != "custom" and self.sweep_name != SWEEPS[self.experiment][0]:
            bad.append(f"sweep.name: {self.experiment} sweeps {SWEEPS[self.experiment][0]!r}")
        try:
            vals = [float(v) for v in self.sweep_values]
            if not all(math.isfinite(v) for v in vals):
                raise ValueError
        except (TypeError, ValueError):
            bad.append("sweep.values: must be finite numbers")
        if bad:
            raise ValidationError("; ".join(bad))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = {"name": d.pop("sweep_name"), "values": d.pop("sweep_values")}
        return d


def default_scenario(experiment: str) -> dict:
    return {**BASE_SCENARIO, **FIGURE_SCENARIO.get(experiment, {})}


def _merge_scenario(experiment: str, overrides: dict) -> dict:
    base = default_scenario(experiment)
    unknown = sorted(set(overrides) - set(base))
    if unknown:
        raise ValidationError(f"scenario: unknown field(s) {', '.join(unknown)}")
    out = dict(base)
    for k, v in overrides.items():
        ref = base[k]
        if isinstance(ref, list):
            if not isinstance(v, list):
                raise ValidationError(f"scenario.{k}: expected a list")
        elif not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValidationError(f"scenario.{k}: expected a number, got {v!r}")
        out[k] = v
    return out


def build_config(data: dict, experiment: str | None = None) -> ExperimentConfig:
    """Validate a parsed mapping and fill in defaults."""
    if not isinstance(data, dict):
        raise ValidationError("top level must be an object")
    unknown = sorted(set(data) - set(FIELDS))
    if unknown:
        raise ValidationError(f"unknown field(s) {', '.join(unknown)}")
    exp = data.get("experiment", experiment)
    if experiment is not None and exp != experiment:
        raise ValidationError(f"experiment: file says {exp!r} but {experiment!r} was requested")
    if exp not in EXPERIMENTS:
        raise ValidationError(f"experiment: must be one of {EXPERIMENTS}, got {exp!r}")
    sweep = data.get("sweep", {})
    if not isinstance(sweep, dict) or set(sweep) - {"name", "values"}:
        raise ValidationError("sweep: expected an object with fields name and values")
    name0, values0 = SWEEPS[exp]
    scen = data.get("scenario", {})
    if not isinstance(scen, dict):
        raise ValidationError("scenario: expected an object")
    return ExperimentConfig(
        experiment=exp,
        scenario=_merge_scenario(exp, scen),
        sweep_name=sweep.get("name", name0),
        sweep_values=list(sweep.get("values", values0)),
        trials=data.get("trials", TRIALS[exp]),
        seed=data.get("seed", 0),
        output=data.get("output"),
        format=data.get("format", "csv"),
    )


def load_config(path=None, experiment: str | None = None) -> ExperimentConfig:
    """Read a JSON experiment file; an empty or missing path gives the defaults of ``experiment``."""
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from e
    if not text.strip():
        if experiment is None:
            raise ValidationError("experiment: required when the config is empty")
        return build_config({}, experiment)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    return build_config(data, experiment)
