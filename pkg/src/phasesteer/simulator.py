"""Finite-resource count records for both branches of the protocol."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import DomainError
from .qubit import (
    GENERATOR_LABELS,
    PHASE_ALICE_LABELS,
    PHASE_BOB_LABELS,
    generator_branch_joint,
    phase_branch_joint,
)

INTERLEAVE_MODES = ("stochastic", "alternate")


@dataclass(frozen=True)
class ExperimentConfig:
    v: float = 0.97
    phi_true: float = math.pi / 4
    n_z: int = 1000
    n_y: int = 495
    seed: int = 0
    interleave: str = "stochastic"
    index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise DomainError(f"visibility must lie in [0, 1], got {self.v}")
        if self.n_z < 0 or self.n_y < 0:
            raise DomainError("event counts must be nonnegative")
        if not math.isfinite(self.phi_true):
            raise DomainError("phase must be finite")
        if self.interleave not in INTERLEAVE_MODES:
            raise DomainError(f"interleave must be one of {INTERLEAVE_MODES}")


def _frozen_counts(arr, shape):
    out = np.array(arr, dtype=np.int64).reshape(shape)
    if np.any(out < 0):
        raise DomainError("counts must be nonnegative")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class CountRecord:
    """Outcome tallies.

    ``phase_counts[b, a]`` with b over (D, A, H, V) and a over (H, V);
    ``generator_counts[b, a]`` with b, a over (L, R).
    """

    phase_counts: np.ndarray = field(default_factory=lambda: np.zeros((4, 2), dtype=np.int64))
    generator_counts: np.ndarray = field(default_factory=lambda: np.zeros((2, 2), dtype=np.int64))
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "phase_counts", _frozen_counts(self.phase_counts, (4, 2)))
        object.__setattr__(self, "generator_counts", _frozen_counts(self.generator_counts, (2, 2)))

    @property
    def n_z(self) -> int:
        return int(self.phase_counts.sum())

    @property
    def n_y(self) -> int:
        return int(self.generator_counts.sum())

    def __eq__(self, other):
        if not isinstance(other, CountRecord):
            return NotImplemented
        return np.array_equal(self.phase_counts, other.phase_counts) and np.array_equal(
            self.generator_counts, other.generator_counts
        )

    def to_dict(self) -> dict:
        out = {}
        for i, b in enumerate(PHASE_BOB_LABELS):
            for j, a in enumerate(PHASE_ALICE_LABELS):
                out[f"n_{b}{a}"] = int(self.phase_counts[i, j])
        for i, b in enumerate(GENERATOR_LABELS):
            for j, a in enumerate(GENERATOR_LABELS):
                out[f"m_{b}{a}"] = int(self.generator_counts[i, j])
        out["N_Z"] = self.n_z
        out["N_Y"] = self.n_y
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CountRecord":
        phase = [[data[f"n_{b}{a}"] for a in PHASE_ALICE_LABELS] for b in PHASE_BOB_LABELS]
        gen = [[data[f"m_{b}{a}"] for a in GENERATOR_LABELS] for b in GENERATOR_LABELS]
        return cls(np.array(phase), np.array(gen), dict(data.get("metadata", {})))


def simulate_phase_branch(config: ExperimentConfig, rng=None) -> np.ndarray:
    """N_Z events over the eight (Bob outcome, Alice outcome) cells, shape (4, 2)."""
    gen = rngmod.as_generator(config.seed if rng is None else rng, rngmod.PHASE, config.index)
    if config.n_z == 0:
        return np.zeros((4, 2), dtype=np.int64)
    joint = phase_branch_joint(config.phi_true, config.v)  # (4, 2), sums to 1
    if config.interleave == "stochastic":
        p = joint.ravel()
        return gen.multinomial(config.n_z, p / p.sum()).reshape(4, 2)
    # deterministic X/Z alternation: first event X, so X gets the extra odd event
    n_x = (config.n_z + 1) // 2
    counts = np.zeros((4, 2), dtype=np.int64)
    for rows, n in ((slice(0, 2), n_x), (slice(2, 4), config.n_z - n_x)):
        p = joint[rows].ravel()
        counts[rows] = gen.multinomial(n, p / p.sum()).reshape(2, 2)
    return counts


def simulate_generator_branch(config: ExperimentConfig, rng=None) -> np.ndarray:
    """N_Y events of Alice Y / Bob Y, shape (2, 2) indexed (b, a)."""
    gen = rngmod.as_generator(config.seed if rng is None else rng, rngmod.GENERATOR, config.index)
    if config.n_y == 0:
        return np.zeros((2, 2), dtype=np.int64)
    p = np.clip(generator_branch_joint(config.v).ravel(), 0.0, None)
    return gen.multinomial(config.n_y, p / p.sum()).reshape(2, 2)


def simulate(config: ExperimentConfig) -> CountRecord:
    return CountRecord(
        simulate_phase_branch(config),
        simulate_generator_branch(config),
        {
            "v": config.v,
            "phi_true": config.phi_true,
            "seed": config.seed,
            "index": config.index,
            "interleave": config.interleave,
        },
    )


def poisson_resample(counts: CountRecord, seed) -> CountRecord:
    """Replace every tally by a Poisson draw with the observed tally as mean."""
    gen = rngmod.as_generator(seed)
    phase = gen.poisson(counts.phase_counts)
    generator = gen.poisson(counts.generator_counts)
    return CountRecord(phase, generator, dict(counts.metadata))
