"""Run configuration: YAML file plus command-line overrides (flags win).

Recognised keys (all optional)::

    seed: 0
    grid: 512                  # Simpson intervals per axis (even)
    out: results
    prior:      {mu, sigma, v0}
    experiment: {v, phi_true, n_z: [..], repetitions, interleave, workers}
    test:       {n_z: [..], n_y: [..], bootstrap_trials, levels: [..]}
    bounds:     {n: [..], v0_sweep: [..], sigma_sweep: [..], fisher_v: [..], phi_points, v_points}

Angles are in radians.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import yaml

from .errors import DomainError
from .information import V_MAX
from .priors import JointPrior
from .simulator import INTERLEAVE_MODES

log = logging.getLogger(__name__)

SECTIONS = {
    "prior": {"mu": "mu", "sigma": "sigma", "v0": "v0"},
    "experiment": {
        "v": "v",
        "phi_true": "phi_true",
        "n_z": "n_z",
        "repetitions": "repetitions",
        "interleave": "interleave",
        "workers": "workers",
    },
    "test": {"n_z": "test_n_z", "n_y": "n_y", "bootstrap_trials": "bootstrap_trials", "levels": "levels"},
    "bounds": {
        "n": "bound_n",
        "v0_sweep": "v0_sweep",
        "sigma_sweep": "sigma_sweep",
        "fisher_v": "fisher_v",
        "phi_points": "phi_points",
        "v_points": "v_points",
    },
}
TOP_LEVEL = ("seed", "grid", "out")
NON_SEMANTIC = ("out", "workers")


@dataclass(frozen=True)
class RunConfig:
    v: float = 0.97
    phi_true: float = math.pi / 4
    mu: float = math.pi / 4
    sigma: float = math.pi / 16
    v0: float = 0.95
    n_z: tuple = (100, 300, 1000, 3000)
    repetitions: int = 200
    interleave: str = "stochastic"
    workers: int = 1
    test_n_z: tuple = (100, 300, 1000, 3000)
    n_y: tuple = (200, 495)
    bootstrap_trials: int = 50
    levels: tuple = (0.05, 0.01, 0.005)
    bound_n: tuple = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)
    v0_sweep: tuple = (0.9, 0.95, 0.97)
    sigma_sweep: tuple = (math.pi / 8, math.pi / 16, math.pi / 32)
    fisher_v: tuple = (0.5, 0.8, 0.9, 0.97)
    phi_points: int = 181
    v_points: int = 101
    seed: int = 0
    grid: int = 512
    out: str = "results"

    def __post_init__(self):
        for name in ("n_z", "test_n_z", "n_y", "levels", "bound_n", "v0_sweep", "sigma_sweep", "fisher_v"):
            val = getattr(self, name)
            object.__setattr__(self, name, tuple(val) if isinstance(val, (list, tuple)) else (val,))
        self.validate()

    def validate(self):
        if not 0.0 <= self.v <= 1.0:
            raise DomainError(f"visibility must lie in [0, 1], got {self.v}")
        if self.v > V_MAX:
            log.warning("visibility %r clamped to %r", self.v, V_MAX)
            object.__setattr__(self, "v", V_MAX)
        if not math.isfinite(self.phi_true):
            raise DomainError("phi_true must be finite")
        self.prior()  # checks sigma > 0 and v0 in (1/2, 1)
        for v0 in self.v0_sweep:
            JointPrior.from_values(self.mu, self.sigma, v0)
        for s in self.sigma_sweep:
            JointPrior.from_values(self.mu, s, self.v0)
        for name in ("n_z", "test_n_z", "n_y", "bound_n"):
            vals = getattr(self, name)
            if not vals or any(int(n) != n or n < 1 for n in vals):
                raise DomainError(f"{name} must be a nonempty list of positive integers, got {vals}")
        if any(n < 2 for n in self.test_n_z):
            raise DomainError("steering test needs N_Z >= 2")
        for name in ("repetitions", "bootstrap_trials", "workers"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.repetitions < 2:
            raise DomainError("ensemble standard errors need at least 2 repetitions")
        if self.grid < 2 or self.grid % 2:
            raise DomainError(f"grid must be an even number of intervals >= 2, got {self.grid}")
        if self.interleave not in INTERLEAVE_MODES:
            raise DomainError(f"interleave must be one of {INTERLEAVE_MODES}")
        if any(not 0.0 < p < 0.5 for p in self.levels):
            raise DomainError("confidence levels must lie in (0, 0.5)")
        if any(not 0.0 <= v < 1.0 for v in self.fisher_v):
            raise DomainError("fisher_v entries must lie in [0, 1)")
        if self.phi_points < 2 or self.v_points < 2:
            raise DomainError("sweeps need at least 2 points")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")

    def prior(self, **overrides) -> JointPrior:
        vals = {"mu": self.mu, "sigma": self.sigma, "v0": self.v0, **overrides}
        return JointPrior.from_values(**vals)

    def to_dict(self) -> dict:
        return asdict(self)

    def provenance(self) -> dict:
        """Config as embedded in output files; location and worker count do not affect results."""
        out = self.to_dict()
        for key in NON_SEMANTIC:
            out.pop(key)
        return out


def _flatten(data: dict) -> dict:
    flat = {}
    for key, value in data.items():
        if key in TOP_LEVEL:
            flat[key] = value
        elif key in SECTIONS:
            if not isinstance(value, dict):
                raise DomainError(f"config section {key!r} must be a mapping")
            for sub, sub_value in value.items():
                if sub not in SECTIONS[key]:
                    raise DomainError(f"unknown config key {key}.{sub}")
                flat[SECTIONS[key][sub]] = sub_value
        else:
            raise DomainError(f"unknown config key {key!r}")
    return flat


def load_config(path=None, **overrides) -> RunConfig:
    """Defaults, then the YAML file at ``path``, then non-None ``overrides``."""
    values = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise DomainError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise DomainError("config file must contain a mapping")
        values.update(_flatten(data))
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise DomainError(f"invalid config value: {exc}") from exc


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
