"""Seed-splitting rule for reproducible, parallel-safe randomness.

Every random draw in the package comes from ``stream(seed, *key)``: a PCG64
generator seeded by ``numpy.random.SeedSequence(seed, spawn_key=key)``.
SeedSequence hashes the (seed, key) pair, so streams with different keys are
statistically independent and a trial's stream does not depend on how many
other trials ran before it.

Keys used by the package:

    (PHASE, i)            phase-branch counts of experiment i
    (GENERATOR, i)        generator-branch counts of experiment i
    (BOOTSTRAP, i, t)     Poisson resample t of experiment i
    (TRUTH, i)            parameter draw of experiment i (prior-sampled ensembles)
"""

from __future__ import annotations

import numpy as np

PHASE = 1
GENERATOR = 2
BOOTSTRAP = 3
TRUTH = 4
CALIBRATION = 5

SEED_MASK = (1 << 64) - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def as_generator(seed_or_rng, *key: int) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return stream(seed_or_rng, *key)
