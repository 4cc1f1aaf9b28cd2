"""Counter-style RNG streams derived from one root seed.

Every stochastic site in an episode draws from its own stream keyed by
(purpose, timestep, iteration, particle). Results are therefore independent
of evaluation order and safe to parallelize.
"""

import numpy as np

# Stream purpose tags.
ROLLOUT = 0  # per-(timestep, iteration, particle) gradient batches
EXEC = 1  # true-dynamics noise for the executed action
SELECT = 2  # categorical action selection
INIT = 3  # particle initialization
WEIGHT = 4  # fresh weighting batches after the last update

# Per-trial seed mixing constant (decorrelates trial streams from the root).
TRIAL_MIX = 0x9E3779B97F4A7C15


def substream(seed: int, *key) -> np.random.Generator:
    """Independent generator for the given root seed and integer key path."""
    return np.random.default_rng(np.random.SeedSequence(entropy=[int(seed), *map(int, key)]))


def trial_seed(root_seed: int, trial: int) -> int:
    """Seed for trial i: root XOR a fixed per-trial mixing constant."""
    return (int(root_seed) ^ ((trial + 1) * TRIAL_MIX)) % (2**63)
