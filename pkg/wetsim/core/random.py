"""
Deterministic seeded randomness.

Every consumer draws from a stream identified by SeedSpec(master_seed, replica_index, stream_label).
The coordinates are packed injectively into a numpy SeedSequence spawn key and fed to the counter-based
Philox bit generator, so replicas can be evaluated in any order, or concurrently, with identical results.
"""
from typing import Tuple

import numpy as np

from wetsim.core.models import SeedSpec


def _spawn_key(seed: SeedSpec) -> Tuple[int, ...]:
    label = seed.stream_label.encode("utf-8")
    # length prefix keeps (replica, label) -> key injective
    return (seed.replica_index, len(label)) + tuple(label)


class RandomStream:
    """Stream of standard normal and uniform variates attached to one SeedSpec"""

    def __init__(self, seed: SeedSpec):
        """Stream initializer"""
        self.seed = seed
        sequence = np.random.SeedSequence(entropy=seed.master_seed, spawn_key=_spawn_key(seed))
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def rayleigh(self, size=None) -> np.ndarray:
        return self.generator.rayleigh(1.0, size)

    def choice(self, n: int, size: int, p: np.ndarray) -> np.ndarray:
        return self.generator.choice(n, size=size, p=p)


def random_stream(seed: SeedSpec) -> RandomStream:
    """
    Opens the deterministic stream for a seed.

    :param seed: seed coordinates
    :return: random stream
    """
    return RandomStream(seed)
