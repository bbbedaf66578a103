"""Seeded pseudorandom stream built on numpy's counter-based Philox generator.

Philox output depends only on the key derived from the seed and the draw counter,
so identical seeds give identical draws on every platform. Sub-streams are keyed by
the root seed plus a spawn path, so no child stream coincides with another seed's root.
"""
from typing import Tuple

import numpy as np


class Rng:
    def __init__(self, seed: int, path: Tuple[int, ...] = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.path = tuple(int(p) for p in path)
        seed_seq = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._generator = np.random.Generator(np.random.Philox(seed_seq))

    def __repr__(self):
        return 'Rng(seed=%d, path=%s)' % (self.seed, self.path)

    def spawn(self, offset: int) -> "Rng":
        """Independent child stream number <offset> of this one."""
        if offset < 0:
            raise ValueError('spawn offsets are non-negative')
        return Rng(self.seed, self.path + (offset,))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._generator.integers(low, high, size)

    def permutation(self, n):
        return self._generator.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self._generator.choice(a, size=size, replace=replace)


def as_rng(seed) -> Rng:
    """<seed> as a stream: an Rng passes through, an integer seeds a root stream."""
    return seed if isinstance(seed, Rng) else Rng(seed)
