"""Labelled, counter-free random streams.

A stream is identified by ``(seed, label)``; asking for the same shape twice
returns the same numbers. Sub-streams are derived by extending the label, so
a draw never depends on how many other draws happened before it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    seed: int
    label: str

    def child(self, *parts) -> "RngStream":
        return RngStream(self.seed, "/".join([self.label, *map(str, parts)]))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence([self.seed & _MASK64, _label_key(self.label)])
        return np.random.Generator(np.random.PCG64(seq))

    def uniform(self, shape) -> np.ndarray:
        """Uniform draws on the open interval (0, 1)."""
        k = self.generator().integers(0, 1 << 53, size=shape, dtype=np.int64)
        return (k.astype(np.float64) + 0.5) * 2.0 ** -53

    def uniform_range(self, low: float, high: float, shape) -> np.ndarray:
        return low + (high - low) * self.uniform(shape)


def gumbel_from_uniform(u) -> np.ndarray:
    return -np.log(-np.log(np.asarray(u, dtype=np.float64)))


def sample_gumbel(shape, rng: RngStream) -> np.ndarray:
    """Standard Gumbel noise ``-log(-log(u))``."""
    return gumbel_from_uniform(rng.uniform(shape))
