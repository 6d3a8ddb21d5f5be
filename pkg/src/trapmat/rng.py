"""Seedable, splittable counter-based random generator.

Every sampler in the library takes an explicit `Rng`.  Child streams are
derived by hashing (seed, path) into a Philox key, so any subtree of the
sampling process is reproducible from the root seed alone and independent
streams never share counters.
"""

from __future__ import annotations

import hashlib

import numpy as np


class Rng:
    """A stream of randomness identified by (seed, path).

    `split(tag)` derives an independent child stream; drawing from a parent
    never perturbs its children.  The underlying generator is counter-based
    (Philox), keyed by a BLAKE2b hash of the identifying path.
    """

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = path
        self._gen: np.random.Generator | None = None

    def split(self, tag: int) -> "Rng":
        return Rng(self.seed, self.path + (int(tag),))

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            h = hashlib.blake2b(digest_size=16)
            h.update(self.seed.to_bytes(16, "little", signed=True))
            for t in self.path:
                h.update(t.to_bytes(16, "little", signed=True))
            key = int.from_bytes(h.digest(), "little")
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    # Convenience passthroughs -------------------------------------------

    def integers(self, low, high=None, size=None, dtype=np.int64):
        return self.generator.integers(low, high, size=size, dtype=dtype)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def geometric(self, p, size=None):
        return self.generator.geometric(p, size)

    def random(self, size=None):
        return self.generator.random(size)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, path={self.path})"
