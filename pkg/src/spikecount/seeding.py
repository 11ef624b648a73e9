"""Derived RNG streams.

Every stochastic step of a run (weight init, spike encoding, shuffling,
splitting) draws from its own generator derived from the run seed plus
integer stream tags, so changing one consumer never perturbs another and
whole runs replay bit-identically.
"""

import numpy as np

STREAM_INIT = 0
STREAM_TRAIN_ENCODE = 1
STREAM_EVAL_ENCODE = 2
STREAM_SHUFFLE = 3
STREAM_SPLIT = 4


def derived_rng(seed, *tags):
    """Generator seeded by (seed, *tags); all values must be non-negative ints."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))
