"""Reproducible random streams.

Every stream is a Philox4x64-10 counter-based generator keyed by
``(master_seed, stream_id)``; the key is ``master_seed * 2**64 + stream_id``.
Uniforms are ``(k + 0.5) / 2**53`` where ``k`` is the top 53 bits of the
next raw 64-bit Philox output, and
Gaussians are obtained by the inverse normal CDF of those uniforms, so a
stream can be replayed by any implementation of Philox and ``ndtri``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_TWO53 = float(2 ** 53)


class Stream:
    """A keyed Philox stream with inverse-CDF Gaussian draws."""

    def __init__(self, seed: int, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not (0 <= seed < 2 ** 64 and 0 <= stream_id < 2 ** 64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        self._bits = np.random.Philox(key=(seed << 64) | stream_id)

    def uniform(self, size=None) -> np.ndarray:
        count = 1 if size is None else int(np.prod(size))
        k = self._bits.random_raw(count) >> np.uint64(11)
        u = (k.astype(float) + 0.5) / _TWO53
        return u[0] if size is None else u.reshape(size)

    def normal(self, size=None) -> np.ndarray:
        return ndtri(self.uniform(size))

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")

    def signs(self, size) -> np.ndarray:
        return np.where(self.uniform(size) < 0.5, -1.0, 1.0)


def replication_stream(seed: int, replication: int) -> Stream:
    """Sub-stream for one simulation replication; depends only on (seed, replication)."""
    return Stream(seed, replication + 1)
