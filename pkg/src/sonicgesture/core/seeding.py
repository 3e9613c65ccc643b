"""Seed fan-out: one global seed becomes independent per-stage, per-item seeds.

derive_seed(seed, stage, index) hashes the triple (seed, STAGE_IDS[stage], index)
through numpy's SeedSequence and returns the first 32-bit word of its state.
Stage ids are part of the on-disk contract: changing one changes every corpus
generated with it.
"""

from __future__ import annotations

import numpy as np

STAGE_IDS: dict[str, int] = {
    "simulate": 1,
    "split": 2,
    "augment": 3,
    "init": 4,
    "shuffle": 5,
    "subject": 6,
}


def derive_seed(seed: int, stage: str, index: int = 0) -> int:
    if stage not in STAGE_IDS:
        raise KeyError(f"unknown seed stage '{stage}'")
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, STAGE_IDS[stage], int(index)])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def rng_for(seed: int, stage: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, stage, index))
