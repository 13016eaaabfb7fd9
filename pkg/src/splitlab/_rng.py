"""Deterministic stream derivation.

Every stochastic entry point derives its generator from
(master_seed, purpose, replicate_index) through SeedSequence, so results are
reproducible bit for bit, independent of execution order or worker count, and
adding replicates never perturbs existing ones.
"""

from __future__ import annotations

import numpy as np

# registry of stream purposes; stable small ints, never reordered
_PURPOSES = {
    "simulate": 1,
    "chain": 2,
    "fixedpoint": 3,
    "constants": 4,
    "verify": 5,
    "splitter-mc": 6,
    "coupling": 7,
    "sandwich": 8,
    "test": 9,
}


def purpose_tag(name: str) -> int:
    try:
        return _PURPOSES[name]
    except KeyError:
        raise ValueError(f"unknown stream purpose {name!r}") from None


def seed_seq(master_seed: int, purpose: str, index: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence((int(master_seed), purpose_tag(purpose), int(index)))


def generator(master_seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_seq(master_seed, purpose, index)))


def bit_generator(master_seed: int, purpose: str, index: int = 0) -> np.random.PCG64:
    return np.random.PCG64(seed_seq(master_seed, purpose, index))
