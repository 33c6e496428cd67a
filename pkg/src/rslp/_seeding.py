"""Deterministic seed derivation for nested, parallel work units.

Every stochastic unit of work (a subspace draw, a bootstrap replicate, a
Monte Carlo repetition) gets its own generator keyed by the master seed
plus integer stage/unit tags. Results are therefore invariant to the
order in which units are materialised and to the worker count.
"""

from __future__ import annotations

import numpy as np

# Stage tags keep the derived streams of different pipeline stages disjoint.
STAGE_SUBSPACE = 1
STAGE_DRAW = 2
STAGE_BOOTSTRAP = 3
STAGE_BOOTSTRAP_SUBSPACE = 4
STAGE_CV = 5
STAGE_JACKKNIFE = 6
STAGE_MONTE_CARLO = 7
STAGE_WINDOW = 8
STAGE_FULL_SAMPLE = 9


def seed_sequence(seed: int, *tags: int) -> np.random.SeedSequence:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.SeedSequence(entropy=(int(seed), *(int(t) for t in tags)))


def rng_for(seed: int, *tags: int) -> np.random.Generator:
    """Generator for the work unit identified by (seed, tags...)."""
    return np.random.default_rng(seed_sequence(seed, *tags))


def derive_seed(seed: int, *tags: int) -> int:
    """Collapse (seed, tags...) into a fresh 63-bit master seed."""
    state = seed_sequence(seed, *tags).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))
