"""Seed derivation so every stochastic stream is a pure function of one base seed."""

import numpy as np

# stream tags keep e.g. weather and exploration draws independent for the same base seed
WEATHER = 1
EXPLORATION = 2
NETWORK_INIT = 3
REPLAY = 4
NORMALIZER = 5
HELDOUT = 6
DEMOS = 7
MINIBATCH = 8
POLICY = 9


def derive_seed(base, *keys):
    """Return a 63-bit integer seed determined by ``base`` and ``keys``."""
    entropy = [int(base) & 0xFFFFFFFFFFFFFFFF] + [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))


def make_rng(base, *keys):
    return np.random.default_rng(derive_seed(base, *keys))
