"""Experiment configuration: a JSON file validated against ``config.schema.json``."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from .errors import ValidationError

__all__ = ["ExperimentConfig", "PRESETS", "load_config", "schema", "config_hash"]


@dataclass
class ExperimentConfig:
    """Every knob an experiment can read. Unused keys are ignored by a command."""

    experiment: str = "custom"
    signal: str = "five-mode"
    input: Optional[str] = None
    model: Optional[str] = None
    M: int = 100
    n_periods: int = 2
    dt: float = 0.1
    n_steps: int = 401
    start: int = 0
    period: Optional[int] = None
    demean: bool = False
    component: Optional[int] = None
    threshold: float = 1e-10
    rank_tol: float = 1e-10
    L: int = 9
    L_sweep: list = field(default_factory=list)
    M_sweep: list = field(default_factory=list)
    sweep: str = "M"
    rL_sweep: list = field(default_factory=list)
    first_half: list = field(default_factory=lambda: [1, 2, 4, 8, 12])
    train_samples: Optional[int] = None
    rows: str = "prefix"
    solver: str = "time"
    svd_cutoff: float = 1e-15
    r_prime_cutoff: float = 1e-10
    snr_fraction: float = 0.0
    seed: int = 0
    ensemble_size: int = 500
    workers: int = 1
    stable_nmse: float = 0.5
    eps_levels: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    grid: dict = field(default_factory=lambda: {"re": [-1.5, 1.5], "im": [-1.5, 1.5], "n": 301})
    J: int = 200
    horizon: int = 2400
    steps: int = 100
    vdp: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(kw)
        return from_dict(d)


def schema() -> dict:
    text = resources.files("delay_embed").joinpath("config.schema.json").read_text()
    return json.loads(text)


def from_dict(d: dict) -> ExperimentConfig:
    try:
        jsonschema.validate(d, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"config error at {where}: {exc.message}") from None
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(**{k: v for k, v in d.items() if k in known})


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read a JSON config and overlay it on ``base`` (defaults if omitted)."""
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise ValidationError("config must be a JSON object")
    merged = (base or ExperimentConfig()).to_dict()
    merged.update(d)
    return from_dict(merged)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# Presets are named after the figure or table whose data they regenerate.
PRESETS = {
    "fig-result-1": dict(signal="five-mode", M=100, n_periods=2, train_samples=40,
                         L_sweep=list(range(1, 16))),
    "fig-result-3": dict(sweep="M", M_sweep=[26, 50, 100, 200, 400]),
    "fig-result-4": dict(sweep="L", M=500, L_sweep=[9, 20, 50, 100, 120, 200, 300, 400, 499]),
    "fig-result-5": dict(sweep="subsample", L=9, M_sweep=list(range(26, 99, 8))),
    "fig-bounds": dict(sweep="bounds", M=100, L_sweep=[9, 19, 49, 99, 109, 199, 209, 499]),
    "five-mode-spectrum": dict(signal="five-mode", M=100, n_periods=1, threshold=1e-10),
    "quasi-window": dict(signal="quasi", dt=0.1, n_steps=4932, period=4932, threshold=0.1),
    "fig-true-quasi": dict(signal="quasi", dt=0.1, n_steps=401, train_samples=61,
                           L_sweep=list(range(1, 11))),
    "tab-vdp": dict(signal="vdp", threshold=0.01, rank_tol=1e-10,
                    vdp={"mu": 2.0, "dt": 0.01, "discard": 530, "period": 776, "n_periods": 4,
                         "x1_M": 200, "x1_L": 9, "x2_M": 100, "x2_L": 17,
                         "train_samples": 60, "vector_M": 80, "vector_L": [7, 8]}),
    "fig-noise-ensemble": dict(signal="five-mode", M=100, n_periods=3, snr_fraction=0.01,
                               ensemble_size=500, L_sweep=[9, 20], stable_nmse=0.5),
    "fig-noise-spectra": dict(signal="five-mode", M=100, snr_fraction=0.01,
                              L_sweep=[6, 9, 12, 20, 39],
                              grid={"re": [-1.5, 1.5], "im": [-1.5, 1.5], "n": 161}),
    "fig-wave-surrogate": dict(signal="surrogate", J=200, M=400, horizon=2400,
                               rL_sweep=[[200, 0], [200, 1], [200, 2], [10, 0], [10, 9], [10, 39]]),
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return from_dict({**ExperimentConfig().to_dict(), "experiment": name, **PRESETS[name]})
