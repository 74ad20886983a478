"""Reproducible random streams"""

import numpy as np


def stream(seed: int, replica: int = 0) -> np.random.Generator:
    """Independent counter-based stream for the (seed, replica) pair"""
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(replica)])
    return np.random.Generator(np.random.Philox(sequence))
