"""Deterministic derivation of random generators and child seeds.

Every stream in the package is a pure function of the user-supplied seed
plus structural indices (restart number, permutation replicate, holdout
repeat), never of execution order, so concurrent schedules cannot change
results.
"""

from __future__ import annotations

import numpy as np

__all__ = ["derive_rng", "derive_seed"]


def derive_rng(*keys: int) -> np.random.Generator:
    """Generator keyed by an integer path such as (seed, replicate)."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def derive_seed(*keys: int) -> int:
    """Integer child seed keyed by an integer path."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])
