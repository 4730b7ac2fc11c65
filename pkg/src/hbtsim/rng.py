"""Deterministic RNG derivation.

Every stochastic operation takes an explicit seed; segmented runs derive
per-segment seeds from (master seed, segment index) so that results do not
depend on scheduling order.
"""

import numpy as np


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Generator fully determined by a master seed and an integer key path."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *key]))
